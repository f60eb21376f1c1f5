use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-node and per-link success probabilities for a cluster of `n` backups.
///
/// Nodes are indexed `0..n`. The primary is an external coordinator that
/// never fails; `link_down[i]` and `link_up[i]` are its links to and from
/// node `i`. `link_mesh[u][i]` is delivery from node `u` to node `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub n: usize,
    pub f: usize,
    pub node: Vec<f64>,
    pub link_down: Vec<f64>,
    pub link_up: Vec<f64>,
    pub link_mesh: Vec<Vec<f64>>,
}

impl ClusterParams {
    /// Every node reliable with `p_n`, every link (all directions) with `p_l`.
    pub fn iid(n: usize, f: usize, p_n: f64, p_l: f64) -> Self {
        ClusterParams {
            n,
            f,
            node: vec![p_n; n],
            link_down: vec![p_l; n],
            link_up: vec![p_l; n],
            link_mesh: vec![vec![p_l; n]; n],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 {
            return Err(Error::InvalidParams("n must be at least 1".to_string()));
        }
        if self.f >= n {
            return Err(Error::InvalidParams(format!(
                "f = {} must be below n = {n}",
                self.f
            )));
        }
        for (name, v) in [
            ("node", &self.node),
            ("link_down", &self.link_down),
            ("link_up", &self.link_up),
        ] {
            if v.len() != n {
                return Err(Error::InvalidParams(format!(
                    "{name} has {} entries, expected {n}",
                    v.len()
                )));
            }
            check_probs(name, v)?;
        }
        if self.link_mesh.len() != n || self.link_mesh.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidParams(format!(
                "link_mesh must be {n}x{n}"
            )));
        }
        for row in &self.link_mesh {
            check_probs("link_mesh", row)?;
        }
        Ok(())
    }

    /// Same parameters with every link made perfect.
    pub fn node_only(&self) -> Self {
        ClusterParams {
            link_down: vec![1.0; self.n],
            link_up: vec![1.0; self.n],
            link_mesh: vec![vec![1.0; self.n]; self.n],
            ..self.clone()
        }
    }

    /// Same parameters with every node made non-faulty.
    pub fn links_only(&self) -> Self {
        ClusterParams {
            node: vec![1.0; self.n],
            ..self.clone()
        }
    }

    /// The constant `(p_n, p_l)` pair if every entry shares one value.
    pub fn as_iid(&self) -> Option<(f64, f64)> {
        let p_n = *self.node.first()?;
        let p_l = *self.link_down.first()?;
        let same = |v: &[f64], x: f64| v.iter().all(|&y| y == x);
        let mesh_same = self
            .link_mesh
            .iter()
            .enumerate()
            .all(|(u, row)| row.iter().enumerate().all(|(i, &y)| u == i || y == p_l));
        (same(&self.node, p_n) && same(&self.link_down, p_l) && same(&self.link_up, p_l) && mesh_same)
            .then_some((p_n, p_l))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let params: ClusterParams =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }
}

fn check_probs(name: &str, values: &[f64]) -> Result<()> {
    match values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        Some(p) => Err(Error::InvalidParams(format!(
            "{name} contains {p}, outside [0, 1]"
        ))),
        None => Ok(()),
    }
}

/// Check a scalar probability argument.
pub fn check_prob(name: &str, p: f64) -> Result<()> {
    check_probs(name, &[p])
}
