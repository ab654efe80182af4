//! Log-linear binary encoding of numerical hyperparameters.
//!
//! Category `i` owns `a_i` exponent bits followed by `b_i` mantissa bits.
//! The exponent bits read as an unsigned binary integer (most significant
//! bit first, `-1 -> 0`, `+1 -> 1`) offset by `e_i`; the mantissa bits index
//! a table of `2^b_i` values. The decoded value is `10^e * mantissa`.
//!
//! For Group Lasso the bits form `2k` base groups: the exponent bits of each
//! category (`g_i`) and the mantissa bits of each category (`h_i`). A basis
//! column belongs to the group named by the set of base groups its
//! variables touch.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::fourier::{BasisFamily, BooleanPoint, Restriction};
use crate::recovery::{ColumnGroup, GroupStructure};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Category {
    name: String,
    exponent_bits: usize,
    exponent_offset: i32,
    mantissa: Vec<f64>,
}

impl Category {
    pub fn new(
        name: impl Into<String>,
        exponent_bits: usize,
        exponent_offset: i32,
        mantissa: Vec<f64>,
    ) -> Result<Self> {
        let name = name.into();
        if !mantissa.len().is_power_of_two() {
            return Err(Error::Argument(format!(
                "category {name:?}: mantissa table has {} values; need a power of two",
                mantissa.len()
            )));
        }
        if mantissa.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument(format!(
                "category {name:?}: mantissa values must be finite"
            )));
        }
        if exponent_bits > 16 {
            return Err(Error::Argument(format!(
                "category {name:?}: {exponent_bits} exponent bits is too many"
            )));
        }
        if exponent_bits + mantissa.len().trailing_zeros() as usize == 0 {
            return Err(Error::Argument(format!("category {name:?} has no bits")));
        }
        Ok(Self {
            name,
            exponent_bits,
            exponent_offset,
            mantissa,
        })
    }

    /// Mantissa table `1, 2, ..., 2^mantissa_bits`.
    pub fn with_default_mantissa(
        name: impl Into<String>,
        exponent_bits: usize,
        exponent_offset: i32,
        mantissa_bits: usize,
    ) -> Result<Self> {
        let table = (1..=1usize << mantissa_bits).map(|v| v as f64).collect();
        Self::new(name, exponent_bits, exponent_offset, table)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn exponent_bits(&self) -> usize {
        self.exponent_bits
    }

    pub fn mantissa_bits(&self) -> usize {
        self.mantissa.len().trailing_zeros() as usize
    }

    pub fn width(&self) -> usize {
        self.exponent_bits + self.mantissa_bits()
    }

    pub fn exponent_range(&self) -> Range<i32> {
        self.exponent_offset..self.exponent_offset + (1 << self.exponent_bits)
    }

    pub fn mantissa_table(&self) -> &[f64] {
        &self.mantissa
    }

    pub fn value(&self, exponent: i32, mantissa_index: usize) -> f64 {
        // Dividing by an exact power of ten keeps values like 5e-6 exact.
        if exponent < 0 {
            self.mantissa[mantissa_index] / 10f64.powi(-exponent)
        } else {
            10f64.powi(exponent) * self.mantissa[mantissa_index]
        }
    }
}

/// Serialized form of a category, as found in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategorySpec {
    pub name: String,
    pub exponent_bits: usize,
    pub exponent_offset: i32,
    /// Explicit mantissa table; its length must be a power of two.
    #[serde(default)]
    pub mantissa: Option<Vec<f64>>,
    /// Used with the default table `1..=2^mantissa_bits` when `mantissa` is absent.
    #[serde(default)]
    pub mantissa_bits: Option<usize>,
}

impl TryFrom<&CategorySpec> for Category {
    type Error = Error;

    fn try_from(spec: &CategorySpec) -> Result<Self> {
        match (&spec.mantissa, spec.mantissa_bits) {
            (Some(_), Some(_)) => Err(Error::Argument(format!(
                "category {:?}: give either mantissa or mantissa_bits, not both",
                spec.name
            ))),
            (Some(table), None) => Category::new(
                spec.name.clone(),
                spec.exponent_bits,
                spec.exponent_offset,
                table.clone(),
            ),
            (None, bits) => Category::with_default_mantissa(
                spec.name.clone(),
                spec.exponent_bits,
                spec.exponent_offset,
                bits.unwrap_or(0),
            ),
        }
    }
}

/// One decoded category value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decoded {
    pub exponent: i32,
    pub mantissa_index: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HyperparamSpace {
    categories: Vec<Category>,
    offsets: Vec<usize>,
    n: usize,
}

impl HyperparamSpace {
    pub fn new(categories: Vec<Category>) -> Result<Self> {
        if categories.is_empty() {
            return Err(Error::Argument("space has no categories".into()));
        }
        let mut names = BTreeSet::new();
        let mut offsets = Vec::with_capacity(categories.len());
        let mut n = 0;
        for c in &categories {
            if !names.insert(c.name()) {
                return Err(Error::Argument(format!("duplicate category {:?}", c.name())));
            }
            offsets.push(n);
            n += c.width();
        }
        Ok(Self {
            categories,
            offsets,
            n,
        })
    }

    pub fn from_specs(specs: &[CategorySpec]) -> Result<Self> {
        Self::new(specs.iter().map(Category::try_from).collect::<Result<_>>()?)
    }

    /// Total number of bits.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of categories `k`.
    pub fn k(&self) -> usize {
        self.categories.len()
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn exponent_bits(&self, i: usize) -> Range<usize> {
        let start = self.offsets[i];
        start..start + self.categories[i].exponent_bits
    }

    pub fn mantissa_bits(&self, i: usize) -> Range<usize> {
        let start = self.offsets[i] + self.categories[i].exponent_bits;
        start..start + self.categories[i].mantissa_bits()
    }

    pub fn decode_category(&self, point: &BooleanPoint, i: usize) -> Result<Decoded> {
        point.check_dim(self.n)?;
        let c = &self.categories[i];
        let e = read_binary(point, self.exponent_bits(i));
        let mi = read_binary(point, self.mantissa_bits(i));
        let exponent = c.exponent_offset + e as i32;
        Ok(Decoded {
            exponent,
            mantissa_index: mi,
            value: c.value(exponent, mi),
        })
    }

    /// One real value per category.
    pub fn decode(&self, point: &BooleanPoint) -> Result<Vec<f64>> {
        (0..self.k())
            .map(|i| self.decode_category(point, i).map(|d| d.value))
            .collect()
    }

    /// Encodes `(exponent, mantissa_index)` per category.
    pub fn encode_indices(&self, parts: &[(i32, usize)]) -> Result<BooleanPoint> {
        if parts.len() != self.k() {
            return Err(Error::Dimension {
                expected: self.k(),
                found: parts.len(),
            });
        }
        let mut bits = vec![-1i8; self.n];
        for (i, &(exponent, mi)) in parts.iter().enumerate() {
            let c = &self.categories[i];
            if !c.exponent_range().contains(&exponent) {
                return Err(Error::Argument(format!(
                    "category {:?}: exponent {exponent} outside {:?}",
                    c.name,
                    c.exponent_range()
                )));
            }
            if mi >= c.mantissa.len() {
                return Err(Error::Argument(format!(
                    "category {:?}: mantissa index {mi} out of range",
                    c.name
                )));
            }
            write_binary(
                &mut bits,
                self.exponent_bits(i),
                (exponent - c.exponent_offset) as usize,
            );
            write_binary(&mut bits, self.mantissa_bits(i), mi);
        }
        BooleanPoint::new(bits)
    }

    /// Encodes real values. Each value must be representable; when several
    /// bit patterns decode to the same value the smallest exponent wins.
    pub fn encode(&self, values: &[f64]) -> Result<BooleanPoint> {
        if values.len() != self.k() {
            return Err(Error::Dimension {
                expected: self.k(),
                found: values.len(),
            });
        }
        let parts = values
            .iter()
            .zip(&self.categories)
            .map(|(&v, c)| {
                c.exponent_range()
                    .flat_map(|e| (0..c.mantissa.len()).map(move |mi| (e, mi)))
                    .find(|&(e, mi)| {
                        let x = c.value(e, mi);
                        (x - v).abs() <= 1e-12 * v.abs().max(x.abs())
                    })
                    .ok_or_else(|| {
                        Error::Argument(format!("{v} is not representable in category {:?}", c.name))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        self.encode_indices(&parts)
    }

    /// Base group of each bit: `g_i` is `i`, `h_i` is `k + i`.
    pub fn base_group_of_bits(&self) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for i in 0..self.k() {
            for b in self.exponent_bits(i) {
                out[b] = i;
            }
            for b in self.mantissa_bits(i) {
                out[b] = self.k() + i;
            }
        }
        out
    }

    pub fn base_group_label(&self, g: usize) -> String {
        if g < self.k() {
            format!("g_{}", self.categories[g].name)
        } else {
            format!("h_{}", self.categories[g - self.k()].name)
        }
    }

    /// Smallest and largest decoded value of each category over the points
    /// that agree with `r`.
    pub fn reduced_ranges(&self, r: &Restriction) -> Result<Vec<(f64, f64)>> {
        if r.n() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: r.n(),
            });
        }
        let consistent = |range: Range<usize>, value: usize| {
            let w = range.len();
            range.enumerate().all(|(j, bit)| match r.fixed().get(&bit) {
                Some(&v) => (v > 0) == (value >> (w - 1 - j) & 1 == 1),
                None => true,
            })
        };
        Ok((0..self.k())
            .map(|i| {
                let c = &self.categories[i];
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for e in 0..1usize << c.exponent_bits {
                    if !consistent(self.exponent_bits(i), e) {
                        continue;
                    }
                    for mi in 0..c.mantissa.len() {
                        if consistent(self.mantissa_bits(i), mi) {
                            let v = c.value(c.exponent_offset + e as i32, mi);
                            lo = lo.min(v);
                            hi = hi.max(v);
                        }
                    }
                }
                (lo, hi)
            })
            .collect())
    }
}

fn read_binary(point: &BooleanPoint, bits: Range<usize>) -> usize {
    bits.fold(0, |acc, b| acc << 1 | usize::from(point.get(b) > 0))
}

fn write_binary(out: &mut [i8], bits: Range<usize>, value: usize) {
    let w = bits.len();
    for (j, b) in bits.enumerate() {
        out[b] = if value >> (w - 1 - j) & 1 == 1 { 1 } else { -1 };
    }
}

/// Number of non-constant groups a degree-`d` basis can produce over `k`
/// categories: `sum_{i=1}^{d} C(2k, i)`.
pub fn group_count_bound(k: usize, d: usize) -> u128 {
    crate::fourier::basis_size(2 * k, d) - 1
}

/// Assigns every basis column to the group of base groups its variables
/// touch. The constant column gets its own group with weight 0 so the
/// intercept is never penalized; every other group is weighted by the square
/// root of its size.
pub fn group_columns(space: &HyperparamSpace, basis: &BasisFamily) -> Result<GroupStructure> {
    if basis.n() != space.n() {
        return Err(Error::Dimension {
            expected: space.n(),
            found: basis.n(),
        });
    }
    let of_bit = space.base_group_of_bits();
    let mut blocks: BTreeMap<(usize, Vec<usize>), Vec<usize>> = BTreeMap::new();
    for (k, s) in basis.indices().iter().enumerate() {
        let key: Vec<usize> = s
            .vars()
            .iter()
            .map(|&v| of_bit[v])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        blocks.entry((key.len(), key)).or_default().push(k);
    }
    let groups = blocks
        .into_iter()
        .map(|((_, key), columns)| {
            let label = if key.is_empty() {
                "const".to_string()
            } else {
                key.iter()
                    .map(|&g| space.base_group_label(g))
                    .collect::<Vec<_>>()
                    .join("*")
            };
            let weight = if key.is_empty() {
                0.0
            } else {
                (columns.len() as f64).sqrt()
            };
            ColumnGroup {
                label,
                columns,
                weight,
            }
        })
        .collect();
    GroupStructure::new(groups, basis.len())
}
