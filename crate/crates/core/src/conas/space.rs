use std::fmt;

use serde::{Deserialize, Serialize};

use crate::fourier::BooleanPoint;
use crate::{Error, Result};

/// Operations of the reference convolutional cell, in encoder order.
pub const DEFAULT_OPS: [&str; 5] = ["conv_3x3", "conv_5x5", "identity", "max_pool_3x3", "avg_pool_3x3"];

/// Op used to reconnect orphaned nodes.
pub const IDENTITY: &str = "identity";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub name: String,
    /// Input nodes; node 0 is `Cell_{k-2}`, node 1 is `Cell_{k-1}`.
    #[serde(default = "default_inputs")]
    pub inputs: usize,
    pub intermediates: usize,
}

fn default_inputs() -> usize {
    2
}

/// One encoder bit: an `(pred -> succ, op)` edge of one cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct EdgeSlot {
    pub cell: usize,
    pub succ: usize,
    pub pred: usize,
    pub op: usize,
}

/// The fully connected cell DAGs. Nodes are numbered inputs first; every
/// intermediate node receives an edge per operation from every earlier
/// node. Bits are ordered by cell, then successor, then predecessor, then
/// operation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArchitectureSpace {
    cells: Vec<CellSpec>,
    ops: Vec<String>,
    slots: Vec<EdgeSlot>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureSpec {
    pub cells: Vec<CellSpec>,
    #[serde(default = "default_ops")]
    pub ops: Vec<String>,
}

fn default_ops() -> Vec<String> {
    DEFAULT_OPS.iter().map(|s| s.to_string()).collect()
}

impl ArchitectureSpace {
    pub fn new(cells: Vec<CellSpec>, ops: Vec<String>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Argument("architecture needs at least one cell".into()));
        }
        if ops.is_empty() {
            return Err(Error::Argument("operation set is empty".into()));
        }
        for (i, op) in ops.iter().enumerate() {
            if ops[..i].contains(op) {
                return Err(Error::Argument(format!("operation {op:?} listed twice")));
            }
        }
        let mut slots = Vec::new();
        for (c, cell) in cells.iter().enumerate() {
            if cell.inputs < 1 || cell.intermediates < 1 {
                return Err(Error::Argument(format!(
                    "cell {:?} needs at least one input and one intermediate node",
                    cell.name
                )));
            }
            for succ in cell.inputs..cell.inputs + cell.intermediates {
                for pred in 0..succ {
                    for op in 0..ops.len() {
                        slots.push(EdgeSlot {
                            cell: c,
                            succ,
                            pred,
                            op,
                        });
                    }
                }
            }
        }
        Ok(Self { cells, ops, slots })
    }

    pub fn from_spec(spec: &ArchitectureSpec) -> Result<Self> {
        Self::new(spec.cells.clone(), spec.ops.clone())
    }

    /// Normal and reduce cell with two inputs each and the default ops.
    pub fn convolutional(intermediates: usize) -> Self {
        let cell = |name: &str| CellSpec {
            name: name.into(),
            inputs: 2,
            intermediates,
        };
        Self::new(vec![cell("normal"), cell("reduce")], default_ops()).expect("valid by construction")
    }

    /// Encoder length.
    pub fn n(&self) -> usize {
        self.slots.len()
    }

    pub fn cells(&self) -> &[CellSpec] {
        &self.cells
    }

    pub fn ops(&self) -> &[String] {
        &self.ops
    }

    pub fn slot(&self, bit: usize) -> EdgeSlot {
        self.slots[bit]
    }

    pub fn bit_of(&self, slot: EdgeSlot) -> Option<usize> {
        self.slots.binary_search(&slot).ok()
    }

    fn op_index(&self, name: &str) -> Option<usize> {
        self.ops.iter().position(|o| o == name)
    }
}

/// Rejects Bernoulli parameters outside `(0, 1)`.
pub fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "Bernoulli p must lie in (0, 1), got {p}"
        )))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CellEdge {
    pub pred: usize,
    pub succ: usize,
    pub op: String,
}

/// Active edges of one cell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CellGraph {
    pub name: String,
    pub inputs: usize,
    pub intermediates: usize,
    pub edges: Vec<CellEdge>,
}

impl CellGraph {
    pub fn incoming(&self, node: usize) -> usize {
        self.edges.iter().filter(|e| e.succ == node).count()
    }
}

impl fmt::Display for CellGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cell {}", self.name)?;
        writeln!(
            f,
            "nodes inputs={} intermediates={}",
            self.inputs, self.intermediates
        )?;
        for e in &self.edges {
            writeln!(f, "edge {} -> {} {}", e.pred, e.succ, e.op)?;
        }
        Ok(())
    }
}

/// Active `(pred, succ, op)` edges of every cell, in encoder order.
pub fn decode_cells(space: &ArchitectureSpace, alpha: &BooleanPoint) -> Result<Vec<CellGraph>> {
    alpha.check_dim(space.n())?;
    let mut cells: Vec<CellGraph> = space
        .cells
        .iter()
        .map(|c| CellGraph {
            name: c.name.clone(),
            inputs: c.inputs,
            intermediates: c.intermediates,
            edges: Vec::new(),
        })
        .collect();
    for (bit, slot) in space.slots.iter().enumerate() {
        if alpha.get(bit) == 1 {
            cells[slot.cell].edges.push(CellEdge {
                pred: slot.pred,
                succ: slot.succ,
                op: space.ops[slot.op].clone(),
            });
        }
    }
    Ok(cells)
}

/// Inverse of [`decode_cells`].
pub fn encode_cells(space: &ArchitectureSpace, cells: &[CellGraph]) -> Result<BooleanPoint> {
    if cells.len() != space.cells.len() {
        return Err(Error::Dimension {
            expected: space.cells.len(),
            found: cells.len(),
        });
    }
    let mut alpha = BooleanPoint::filled(space.n(), -1);
    for (c, cell) in cells.iter().enumerate() {
        for e in &cell.edges {
            let slot = space.op_index(&e.op).and_then(|op| {
                space.bit_of(EdgeSlot {
                    cell: c,
                    succ: e.succ,
                    pred: e.pred,
                    op,
                })
            });
            let bit = slot.ok_or_else(|| {
                Error::Input(format!(
                    "edge {} -> {} {} is not in cell {:?}",
                    e.pred, e.succ, e.op, cell.name
                ))
            })?;
            alpha.set(bit, 1);
        }
    }
    Ok(alpha)
}

/// Connects every intermediate node without incoming edges to `Cell_{k-2}`
/// (node 0) with an identity edge.
pub fn repair_cell(cell: &CellGraph) -> CellGraph {
    let mut out = cell.clone();
    for node in cell.inputs..cell.inputs + cell.intermediates {
        if cell.incoming(node) == 0 {
            out.edges.push(CellEdge {
                pred: 0,
                succ: node,
                op: IDENTITY.into(),
            });
        }
    }
    out
}

/// Number of differing coordinates.
pub fn hamming(a: &BooleanPoint, b: &BooleanPoint) -> Result<usize> {
    a.hamming(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encoder_lengths() {
        assert_eq!(ArchitectureSpace::convolutional(4).n(), 140);
        assert_eq!(ArchitectureSpace::convolutional(2).n(), 50);
    }

    #[test]
    fn canonical_order() {
        let space = ArchitectureSpace::convolutional(2);
        assert_eq!(
            space.slot(0),
            EdgeSlot {
                cell: 0,
                succ: 2,
                pred: 0,
                op: 0
            }
        );
        assert_eq!(
            space.slot(5),
            EdgeSlot {
                cell: 0,
                succ: 2,
                pred: 1,
                op: 0
            }
        );
        assert_eq!(
            space.slot(10),
            EdgeSlot {
                cell: 0,
                succ: 3,
                pred: 0,
                op: 0
            }
        );
        assert_eq!(
            space.slot(25),
            EdgeSlot {
                cell: 1,
                succ: 2,
                pred: 0,
                op: 0
            }
        );
        for bit in 0..space.n() {
            assert_eq!(space.bit_of(space.slot(bit)), Some(bit));
        }
    }

    #[test]
    fn decode_extremes() {
        let space = ArchitectureSpace::convolutional(2);
        let none = decode_cells(&space, &BooleanPoint::filled(50, -1)).unwrap();
        assert!(none.iter().all(|c| c.edges.is_empty()));
        let all = decode_cells(&space, &BooleanPoint::filled(50, 1)).unwrap();
        assert!(all.iter().all(|c| c.edges.len() == 25));
        assert!(decode_cells(&space, &BooleanPoint::filled(49, 1)).is_err());
    }

    #[test]
    fn one_choice_block() {
        let space = ArchitectureSpace::convolutional(2);
        let mut alpha = BooleanPoint::filled(50, -1);
        for b in 0..5 {
            alpha.set(b, 1);
        }
        let cells = decode_cells(&space, &alpha).unwrap();
        assert_eq!(cells[0].edges.len(), 5);
        assert!(cells[0].edges.iter().all(|e| e.pred == 0 && e.succ == 2));
        let ops: Vec<&str> = cells[0].edges.iter().map(|e| e.op.as_str()).collect();
        assert_eq!(ops, DEFAULT_OPS);
        assert!(cells[1].edges.is_empty());
        assert_eq!(encode_cells(&space, &cells).unwrap(), alpha);
    }

    #[test]
    fn repair_rules() {
        let space = ArchitectureSpace::convolutional(4);
        let empty = decode_cells(&space, &BooleanPoint::filled(140, -1)).unwrap();
        let fixed = repair_cell(&empty[0]);
        assert_eq!(fixed.edges.len(), 4);
        for node in 2..6 {
            assert_eq!(fixed.incoming(node), 1);
        }
        assert!(fixed.edges.iter().all(|e| e.pred == 0 && e.op == IDENTITY));
        assert_eq!(repair_cell(&fixed), fixed);

        let full = decode_cells(&space, &BooleanPoint::filled(140, 1)).unwrap();
        assert_eq!(repair_cell(&full[1]), full[1]);
    }

    #[test]
    fn bad_spaces() {
        assert!(ArchitectureSpace::new(vec![], default_ops()).is_err());
        let cell = CellSpec {
            name: "c".into(),
            inputs: 2,
            intermediates: 1,
        };
        assert!(ArchitectureSpace::new(vec![cell.clone()], vec![]).is_err());
        assert!(ArchitectureSpace::new(vec![cell], vec!["a".into(), "a".into()]).is_err());
    }

    #[test]
    fn hamming_examples() {
        let a = BooleanPoint::filled(140, 1);
        assert_eq!(hamming(&a, &a).unwrap(), 0);
        assert_eq!(hamming(&a, &a.negated()).unwrap(), 140);
        assert!(hamming(&a, &BooleanPoint::filled(3, 1)).is_err());
    }
}
