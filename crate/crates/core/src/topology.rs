//! Topological bookkeeping for punctured surfaces: Riemann-Roch dimension of
//! integrable holomorphic quadratic differentials and pinch moves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A connected component of genus `genus` with `punctures` punctures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Component {
    pub genus: u32,
    pub punctures: u32,
}

impl Component {
    pub fn new(genus: u32, punctures: u32) -> Self {
        Component { genus, punctures }
    }

    /// `2 genus + punctures > 2`, i.e. the component carries a hyperbolic metric.
    pub fn is_general_type(&self) -> bool {
        2 * u64::from(self.genus) + u64::from(self.punctures) > 2
    }

    /// `3 (genus - 1) + punctures`.
    pub fn hol_dimension(&self) -> i64 {
        3 * (i64::from(self.genus) - 1) + i64::from(self.punctures)
    }
}

/// A finite collection of components, in a fixed order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawTopology", into = "RawTopology")]
pub struct SurfaceTopology {
    components: Vec<Component>,
}

#[derive(Serialize, Deserialize)]
struct RawTopology {
    components: Vec<Component>,
}

impl TryFrom<RawTopology> for SurfaceTopology {
    type Error = Error;

    fn try_from(raw: RawTopology) -> Result<Self> {
        SurfaceTopology::new(raw.components)
    }
}

impl From<SurfaceTopology> for RawTopology {
    fn from(t: SurfaceTopology) -> Self {
        RawTopology {
            components: t.components,
        }
    }
}

/// Which kind of simple closed geodesic is collapsed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PinchKind {
    Nonseparating,
    /// Splits a component of genus `g1 + g2` with `k1 + k2` punctures.
    Separating {
        g1: u32,
        g2: u32,
        k1: u32,
        k2: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PinchMove {
    pub component: usize,
    #[serde(flatten)]
    pub kind: PinchKind,
}

impl SurfaceTopology {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidTopology("a surface needs at least one component".into()));
        }
        if let Some(c) = components.iter().find(|c| !c.is_general_type()) {
            return Err(Error::InvalidTopology(format!(
                "component of genus {} with {} punctures is not of general type",
                c.genus, c.punctures
            )));
        }
        Ok(SurfaceTopology { components })
    }

    /// A closed connected surface of genus `genus >= 2`.
    pub fn closed(genus: u32) -> Result<Self> {
        SurfaceTopology::new(vec![Component::new(genus, 0)])
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// `sum_i 3 (genus_i - 1) + punctures_i`.
    pub fn hol_dimension(&self) -> u64 {
        self.components
            .iter()
            .map(Component::hol_dimension)
            .sum::<i64>()
            .try_into()
            .expect("general type components have non-negative dimension")
    }

    /// `sum_i max(0, 3 genus_i - 3 + punctures_i)`.
    pub fn max_short_geodesics(&self) -> u64 {
        self.components.iter().map(|c| c.hol_dimension().max(0) as u64).sum()
    }

    /// Applies one pinch; the dimension drops by exactly one.
    pub fn pinch(&self, m: &PinchMove) -> Result<Self> {
        self.pinch_at(m, 0)
    }

    fn pinch_at(&self, m: &PinchMove, index: usize) -> Result<Self> {
        let invalid = |reason: String| Error::InvalidMove { index, reason };
        let target = *self.components.get(m.component).ok_or_else(|| {
            invalid(format!(
                "component {} does not exist ({} components)",
                m.component,
                self.components.len()
            ))
        })?;
        let replacement = match m.kind {
            PinchKind::Nonseparating => {
                if target.genus == 0 {
                    return Err(invalid("nonseparating pinch needs positive genus".into()));
                }
                vec![Component::new(target.genus - 1, target.punctures + 2)]
            }
            PinchKind::Separating { g1, g2, k1, k2 } => {
                if u64::from(g1) + u64::from(g2) != u64::from(target.genus)
                    || u64::from(k1) + u64::from(k2) != u64::from(target.punctures)
                {
                    return Err(invalid(format!(
                        "split ({g1}+{g2}, {k1}+{k2}) does not match component ({}, {})",
                        target.genus, target.punctures
                    )));
                }
                vec![Component::new(g1, k1 + 1), Component::new(g2, k2 + 1)]
            }
        };
        if let Some(c) = replacement.iter().find(|c| !c.is_general_type()) {
            return Err(invalid(format!(
                "result component ({}, {}) is not of general type",
                c.genus, c.punctures
            )));
        }
        let mut components = self.components.clone();
        components.splice(m.component..=m.component, replacement);
        Ok(SurfaceTopology { components })
    }

    /// Every valid pinch of this surface (all components, all splits).
    pub fn valid_moves(&self) -> Vec<PinchMove> {
        let mut moves = Vec::new();
        for (i, c) in self.components.iter().enumerate() {
            let candidates = std::iter::once(PinchKind::Nonseparating).chain((0..=c.genus).flat_map(move |g1| {
                (0..=c.punctures).map(move |k1| PinchKind::Separating {
                    g1,
                    g2: c.genus - g1,
                    k1,
                    k2: c.punctures - k1,
                })
            }));
            for kind in candidates {
                let m = PinchMove { component: i, kind };
                if self.pinch(&m).is_ok() {
                    moves.push(m);
                }
            }
        }
        moves
    }
}

/// Dimension after each successive pinch; the first invalid move aborts
/// with its index.
pub fn degeneration_dims(start: &SurfaceTopology, moves: &[PinchMove]) -> Result<Vec<u64>> {
    let mut current = start.clone();
    let mut dims = Vec::with_capacity(moves.len());
    for (index, m) in moves.iter().enumerate() {
        current = current.pinch_at(m, index)?;
        dims.push(current.hol_dimension());
    }
    Ok(dims)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surface(cs: &[(u32, u32)]) -> SurfaceTopology {
        SurfaceTopology::new(cs.iter().map(|&(g, k)| Component::new(g, k)).collect()).unwrap()
    }

    #[test]
    fn dimensions() {
        assert_eq!(surface(&[(2, 0)]).hol_dimension(), 3);
        assert_eq!(surface(&[(1, 2)]).hol_dimension(), 2);
        assert_eq!(surface(&[(0, 3)]).hol_dimension(), 0);
        assert_eq!(surface(&[(2, 0), (1, 1), (0, 4)]).hol_dimension(), 3 + 1 + 1);
    }

    #[test]
    fn rejects_non_general_type() {
        for (g, k) in [(0, 0), (0, 2), (1, 0)] {
            assert!(SurfaceTopology::new(vec![Component::new(g, k)]).is_err());
        }
        assert!(SurfaceTopology::new(vec![]).is_err());
    }

    #[test]
    fn short_geodesic_bound() {
        assert_eq!(surface(&[(2, 0)]).max_short_geodesics(), 3);
        assert_eq!(surface(&[(0, 3)]).max_short_geodesics(), 0);
        assert_eq!(surface(&[(1, 1)]).max_short_geodesics(), 1);
    }

    #[test]
    fn pinch_moves() {
        let s = surface(&[(2, 0)]);
        let ns = PinchMove {
            component: 0,
            kind: PinchKind::Nonseparating,
        };
        let t = s.pinch(&ns).unwrap();
        assert_eq!(t, surface(&[(1, 2)]));
        assert_eq!(t.hol_dimension(), 2);

        let sep = PinchMove {
            component: 0,
            kind: PinchKind::Separating {
                g1: 1,
                g2: 1,
                k1: 0,
                k2: 0,
            },
        };
        let t = s.pinch(&sep).unwrap();
        assert_eq!(t, surface(&[(1, 1), (1, 1)]));
        assert_eq!(t.hol_dimension(), 2);
    }

    #[test]
    fn invalid_moves() {
        let pants = surface(&[(0, 3)]);
        let ns = PinchMove {
            component: 0,
            kind: PinchKind::Nonseparating,
        };
        assert!(matches!(pants.pinch(&ns), Err(Error::InvalidMove { .. })));
        assert!(pants.valid_moves().is_empty());
        let s = surface(&[(2, 0)]);
        let lopsided = PinchMove {
            component: 0,
            kind: PinchKind::Separating {
                g1: 2,
                g2: 0,
                k1: 0,
                k2: 0,
            },
        };
        assert!(s.pinch(&lopsided).is_err());
        let mismatch = PinchMove {
            component: 0,
            kind: PinchKind::Separating {
                g1: 1,
                g2: 0,
                k1: 0,
                k2: 0,
            },
        };
        assert!(s.pinch(&mismatch).is_err());
        let missing = PinchMove {
            component: 3,
            kind: PinchKind::Nonseparating,
        };
        assert!(s.pinch(&missing).is_err());
    }

    #[test]
    fn degeneration_sequences() {
        let ns = PinchMove {
            component: 0,
            kind: PinchKind::Nonseparating,
        };
        assert_eq!(degeneration_dims(&surface(&[(2, 0)]), &[ns]).unwrap(), vec![2]);
        assert_eq!(degeneration_dims(&surface(&[(3, 0)]), &[ns, ns]).unwrap(), vec![5, 4]);
        assert!(degeneration_dims(&surface(&[(2, 0)]), &[]).unwrap().is_empty());
        let err = degeneration_dims(&surface(&[(1, 1)]), &[ns, ns]).unwrap_err();
        assert!(matches!(err, Error::InvalidMove { index: 1, .. }));
    }

    #[test]
    fn json_schema() {
        let t: SurfaceTopology = serde_json::from_str(r#"{"components": [{"genus": 2, "punctures": 0}]}"#).unwrap();
        assert_eq!(t.hol_dimension(), 3);
        assert!(serde_json::from_str::<SurfaceTopology>(r#"{"components": [{"genus": 0, "punctures": 1}]}"#).is_err());
        let moves: Vec<PinchMove> = serde_json::from_str(
            r#"[{"component": 0, "kind": "nonseparating"},
                {"component": 0, "kind": "separating", "g1": 1, "g2": 0, "k1": 0, "k2": 2}]"#,
        )
        .unwrap();
        assert_eq!(moves[0].kind, PinchKind::Nonseparating);
        assert_eq!(
            degeneration_dims(&SurfaceTopology::closed(2).unwrap(), &moves).unwrap(),
            vec![2, 1]
        );
    }
}
