use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! dense_id {
    ($name:ident, $prefix:literal) => {
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

dense_id!(EntityId, "e");
dense_id!(PassageId, "d");
dense_id!(PropositionId, "p");

/// A vertex of the graph. Propositions are not vertices; they exist as
/// entity cliques.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeId {
    Entity(EntityId),
    Passage(PassageId),
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Entity(e) => e.fmt(f),
            NodeId::Passage(p) => p.fmt(f),
        }
    }
}

impl From<EntityId> for NodeId {
    fn from(e: EntityId) -> Self {
        NodeId::Entity(e)
    }
}

impl From<PassageId> for NodeId {
    fn from(p: PassageId) -> Self {
        NodeId::Passage(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Clique,
    Containment,
    Synonymy,
}

/// Set of edge kinds used to filter neighbor queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeKinds(u8);

impl EdgeKinds {
    pub const NONE: EdgeKinds = EdgeKinds(0);
    pub const CLIQUE: EdgeKinds = EdgeKinds(1);
    pub const CONTAINMENT: EdgeKinds = EdgeKinds(2);
    pub const SYNONYMY: EdgeKinds = EdgeKinds(4);
    pub const ALL: EdgeKinds = EdgeKinds(7);

    pub fn contains(self, kind: EdgeKind) -> bool {
        self.0 & EdgeKinds::from(kind).0 != 0
    }

    pub fn with(self, kind: EdgeKind) -> Self {
        EdgeKinds(self.0 | EdgeKinds::from(kind).0)
    }
}

impl From<EdgeKind> for EdgeKinds {
    fn from(kind: EdgeKind) -> Self {
        match kind {
            EdgeKind::Clique => EdgeKinds::CLIQUE,
            EdgeKind::Containment => EdgeKinds::CONTAINMENT,
            EdgeKind::Synonymy => EdgeKinds::SYNONYMY,
        }
    }
}

impl std::ops::BitOr for EdgeKinds {
    type Output = EdgeKinds;

    fn bitor(self, rhs: Self) -> Self {
        EdgeKinds(self.0 | rhs.0)
    }
}
