use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClusteringError {
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("member {member} appears in clusters {first} and {second}")]
    Overlap {
        member: String,
        first: usize,
        second: usize,
    },
}

/// A partition of members into disjoint, non-empty clusters.
///
/// Clusters are kept in canonical order (sorted by their smallest member),
/// so two clusterings of the same partition compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(
    try_from = "Vec<BTreeSet<M>>",
    into = "Vec<BTreeSet<M>>",
    bound(
        serialize = "M: Ord + Clone + Serialize",
        deserialize = "M: Ord + Clone + std::fmt::Debug + Deserialize<'de>"
    )
)]
pub struct Clustering<M: Ord> {
    clusters: Vec<BTreeSet<M>>,
}

impl<M: Ord> Default for Clustering<M> {
    fn default() -> Self {
        Self { clusters: Vec::new() }
    }
}

impl<M: Ord + Clone + std::fmt::Debug> Clustering<M> {
    pub fn new<C, I>(clusters: C) -> Result<Self, ClusteringError>
    where
        C: IntoIterator<Item = I>,
        I: IntoIterator<Item = M>,
    {
        let mut out: Vec<BTreeSet<M>> = Vec::new();
        let mut seen: BTreeMap<M, usize> = BTreeMap::new();
        for (ci, cluster) in clusters.into_iter().enumerate() {
            let set: BTreeSet<M> = cluster.into_iter().collect();
            if set.is_empty() {
                return Err(ClusteringError::EmptyCluster(ci));
            }
            for m in &set {
                if let Some(&first) = seen.get(m) {
                    return Err(ClusteringError::Overlap {
                        member: format!("{m:?}"),
                        first,
                        second: ci,
                    });
                }
                seen.insert(m.clone(), ci);
            }
            out.push(set);
        }
        out.sort();
        Ok(Self { clusters: out })
    }

    /// Every member in its own cluster.
    pub fn singletons<I: IntoIterator<Item = M>>(members: I) -> Self {
        let set: BTreeSet<M> = members.into_iter().collect();
        Self {
            clusters: set.into_iter().map(|m| BTreeSet::from([m])).collect(),
        }
    }

    /// Relabels members. Fails if the mapping is not injective.
    pub fn map<N, F>(&self, mut f: F) -> Result<Clustering<N>, ClusteringError>
    where
        N: Ord + Clone + std::fmt::Debug,
        F: FnMut(&M) -> N,
    {
        Clustering::new(self.clusters.iter().map(|c| c.iter().map(&mut f).collect::<Vec<_>>()))
    }

    pub fn without_singletons(&self) -> Self {
        Self {
            clusters: self.clusters.iter().filter(|c| c.len() > 1).cloned().collect(),
        }
    }

    /// Keeps only members satisfying `keep`, dropping clusters that become empty.
    pub fn restrict<F: FnMut(&M) -> bool>(&self, mut keep: F) -> Self {
        let mut clusters: Vec<BTreeSet<M>> = self
            .clusters
            .iter()
            .map(|c| c.iter().filter(|m| keep(m)).cloned().collect::<BTreeSet<M>>())
            .filter(|c| !c.is_empty())
            .collect();
        clusters.sort();
        Self { clusters }
    }
}

impl<M: Ord> Clustering<M> {
    pub fn clusters(&self) -> &[BTreeSet<M>] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Number of clustered members.
    pub fn member_count(&self) -> usize {
        self.clusters.iter().map(BTreeSet::len).sum()
    }

    pub fn covers(&self) -> BTreeSet<&M> {
        self.clusters.iter().flatten().collect()
    }

    pub fn contains(&self, m: &M) -> bool {
        self.clusters.iter().any(|c| c.contains(m))
    }

    /// Member → index of its cluster.
    pub fn assignment(&self) -> BTreeMap<&M, usize> {
        self.clusters
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.iter().map(move |m| (m, i)))
            .collect()
    }

    pub fn cluster_of(&self, m: &M) -> Option<&BTreeSet<M>> {
        self.clusters.iter().find(|c| c.contains(m))
    }

    /// Sorted multiset of cluster sizes.
    pub fn size_profile(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.clusters.iter().map(BTreeSet::len).collect();
        v.sort_unstable();
        v
    }
}

impl<M: Ord + Clone + std::fmt::Debug> TryFrom<Vec<BTreeSet<M>>> for Clustering<M> {
    type Error = ClusteringError;

    fn try_from(v: Vec<BTreeSet<M>>) -> Result<Self, Self::Error> {
        Clustering::new(v)
    }
}

impl<M: Ord> From<Clustering<M>> for Vec<BTreeSet<M>> {
    fn from(c: Clustering<M>) -> Self {
        c.clusters
    }
}
