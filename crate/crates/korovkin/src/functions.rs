//! Target functions on the unbounded orthant `[0, inf)^m`.
//!
//! The operators in this crate sample functions at binomial nodes whose
//! image under the transform `x -> x/(1+x)` is uniform in `[0, 1)`. Most
//! bookkeeping therefore happens in that transformed coordinate `p`; the
//! helpers here convert both ways and represent targets in the three
//! shapes the evaluation engine can exploit:
//!
//! * separable products `f(x) = prod_i g_i(x_i)`,
//! * separable sums `f(x) = sum_i g_i(x_i)`,
//! * dense functions given by an arbitrary rule or a node table.
//!
//! Separable shapes matter: over a tensor grid the operator value factors
//! into per-axis reductions, which turns an `O(P^m * n^m)` sweep into
//! `O(P * n)` per axis.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// The order-preserving map `x -> x/(1+x)` from `[0, inf)` onto `[0, 1)`.
pub fn p_transform(x: f64) -> f64 {
    x / (1.0 + x)
}

/// Inverse of [`p_transform`]: `p -> p/(1-p)` on `[0, 1)`.
pub fn p_inverse(p: f64) -> f64 {
    p / (1.0 - p)
}

/// A single-axis factor of a separable target.
pub type AxisFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A pointwise evaluation rule for a dense target.
pub type DenseFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// The constant axis `u -> 1`.
pub fn axis_one() -> AxisFn {
    Arc::new(|_| 1.0)
}

/// The axis `u -> u/(1+u)`, the coordinate function in transformed space.
pub fn axis_ratio() -> AxisFn {
    Arc::new(p_transform)
}

/// The axis `u -> (u/(1+u))^2`.
pub fn axis_ratio_squared() -> AxisFn {
    Arc::new(|u| {
        let t = p_transform(u);
        t * t
    })
}

/// A target function on `[0, inf)^m`.
#[derive(Clone)]
pub enum Target {
    /// `f(x) = prod_i g_i(x_i)`.
    Product { axes: Vec<AxisFn> },
    /// `f(x) = sum_i g_i(x_i)`.
    Sum { axes: Vec<AxisFn> },
    /// An arbitrary rule; evaluated pointwise.
    Dense { m: usize, f: DenseFn },
}

impl fmt::Debug for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Product { axes } => write!(f, "Target::Product(m={})", axes.len()),
            Target::Sum { axes } => write!(f, "Target::Sum(m={})", axes.len()),
            Target::Dense { m, .. } => write!(f, "Target::Dense(m={m})"),
        }
    }
}

impl Target {
    pub fn separable_product(axes: Vec<AxisFn>) -> Self {
        assert!(!axes.is_empty(), "a target needs at least one axis");
        Target::Product { axes }
    }

    pub fn separable_sum(axes: Vec<AxisFn>) -> Self {
        assert!(!axes.is_empty(), "a target needs at least one axis");
        Target::Sum { axes }
    }

    pub fn dense<F>(m: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        assert!(m >= 1, "a target needs at least one axis");
        Target::Dense { m, f: Arc::new(f) }
    }

    /// The constant function `c` in `m` variables.
    pub fn constant(m: usize, c: f64) -> Self {
        assert!(m >= 1, "a target needs at least one axis");
        let mut axes: Vec<AxisFn> = vec![Arc::new(move |_| c)];
        axes.extend((1..m).map(|_| axis_one()));
        Target::Product { axes }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Target::Product { axes } | Target::Sum { axes } => axes.len(),
            Target::Dense { m, .. } => *m,
        }
    }

    /// Evaluates at a point of matching dimension.
    pub fn eval(&self, point: &[f64]) -> f64 {
        debug_assert_eq!(point.len(), self.dimension(), "point dimension mismatch");
        match self {
            Target::Product { axes } => axes
                .iter()
                .zip(point)
                .map(|(g, &x)| g(x))
                .product(),
            Target::Sum { axes } => axes.iter().zip(point).map(|(g, &x)| g(x)).sum(),
            Target::Dense { f, .. } => f(point),
        }
    }
}

/// Errors from parsing tabulated node functions.
#[derive(Debug, Error)]
pub enum TableError {
    #[error("missing header line '# nodes m=<m> n=<n>'")]
    MissingHeader,
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("line {line}: {message}")]
    BadRow { line: usize, message: String },
    #[error("line {line}: node index out of range for n={n}")]
    IndexOutOfRange { line: usize, n: usize },
    #[error("line {line}: duplicate node entry")]
    DuplicateNode { line: usize },
    #[error("table is missing {count} node value(s)")]
    MissingNodes { count: usize },
    #[error("line {line}: value {value} is not finite")]
    NonFiniteValue { line: usize, value: f64 },
    #[error("table dimensions m={m}, n={n} are out of range")]
    BadDimensions { m: usize, n: usize },
}

/// Caps on parsed table dimensions; beyond this the dense evaluation cost
/// `(n+1)^m` stops being sensible.
const TABLE_MAX_M: usize = 4;
const TABLE_MAX_N: usize = 512;

/// A function specified by its values on the degree-`n` node lattice
/// `(node(n, k_1), ..., node(n, k_m))`, `0 <= k_i <= n`, where
/// `node(n, k) = k / (n - k + 1)`.
///
/// Off-lattice points evaluate to the value at the nearest node in
/// transformed coordinates: `node(n, k)` maps to `p = k/(n+1)`, so the
/// nearest node index along an axis is `round(p * (n+1))` clamped to
/// `[0, n]`.
#[derive(Clone, Debug)]
pub struct NodeTable {
    m: usize,
    n: usize,
    /// Row-major over `k_1, ..., k_m` with `k_m` fastest.
    values: Vec<f64>,
}

impl NodeTable {
    pub fn new(m: usize, n: usize, values: Vec<f64>) -> Result<Self, TableError> {
        if !(1..=TABLE_MAX_M).contains(&m) || !(1..=TABLE_MAX_N).contains(&n) {
            return Err(TableError::BadDimensions { m, n });
        }
        let expected = (n + 1).pow(m as u32);
        if values.len() != expected {
            return Err(TableError::MissingNodes {
                count: expected.saturating_sub(values.len()),
            });
        }
        Ok(Self { m, n, values })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Parses the text format: a header `# nodes m=<m> n=<n>` followed by
    /// one line per node, `k_1 ... k_m value`, in any order; every node
    /// must appear exactly once.
    pub fn parse(text: &str) -> Result<Self, TableError> {
        let mut lines = text.lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((_, l)) if l.trim().is_empty() => continue,
                Some((_, l)) => break l.trim().to_string(),
                None => return Err(TableError::MissingHeader),
            }
        };
        let (m, n) = parse_header(&header)?;
        if !(1..=TABLE_MAX_M).contains(&m) || !(1..=TABLE_MAX_N).contains(&n) {
            return Err(TableError::BadDimensions { m, n });
        }

        let expected = (n + 1).pow(m as u32);
        let mut values = vec![f64::NAN; expected];
        let mut seen = vec![false; expected];
        for (idx, raw) in lines {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() != m + 1 {
                return Err(TableError::BadRow {
                    line,
                    message: format!("expected {} fields, found {}", m + 1, fields.len()),
                });
            }
            let mut flat = 0usize;
            for field in &fields[..m] {
                let k: usize = field.parse().map_err(|_| TableError::BadRow {
                    line,
                    message: format!("bad node index '{field}'"),
                })?;
                if k > n {
                    return Err(TableError::IndexOutOfRange { line, n });
                }
                flat = flat * (n + 1) + k;
            }
            let value: f64 = fields[m].parse().map_err(|_| TableError::BadRow {
                line,
                message: format!("bad value '{}'", fields[m]),
            })?;
            if !value.is_finite() {
                return Err(TableError::NonFiniteValue { line, value });
            }
            if seen[flat] {
                return Err(TableError::DuplicateNode { line });
            }
            seen[flat] = true;
            values[flat] = value;
        }
        let missing = seen.iter().filter(|&&s| !s).count();
        if missing > 0 {
            return Err(TableError::MissingNodes { count: missing });
        }
        Self::new(m, n, values)
    }

    /// Serialises back to the text format with nodes in lexicographic
    /// order. Values round-trip exactly through `parse`.
    pub fn to_text(&self) -> String {
        let mut out = format!("# nodes m={} n={}\n", self.m, self.n);
        let mut ks = vec![0usize; self.m];
        for flat in 0..self.values.len() {
            for &k in &ks {
                out.push_str(&format!("{k} "));
            }
            out.push_str(&format!("{:e}\n", self.values[flat]));
            for i in (0..self.m).rev() {
                ks[i] += 1;
                if ks[i] <= self.n {
                    break;
                }
                ks[i] = 0;
            }
        }
        out
    }

    /// Value at an explicit multi-index.
    pub fn value_at(&self, ks: &[usize]) -> f64 {
        assert_eq!(ks.len(), self.m);
        let mut flat = 0usize;
        for &k in ks {
            assert!(k <= self.n, "node index {k} out of range for n={}", self.n);
            flat = flat * (self.n + 1) + k;
        }
        self.values[flat]
    }

    /// Nearest node index for a transformed coordinate `p`.
    pub fn nearest_index(p: f64, n: usize) -> usize {
        let k = (p * (n + 1) as f64).round();
        if k < 0.0 {
            0
        } else if k > n as f64 {
            n
        } else {
            k as usize
        }
    }

    /// Wraps the table as a dense target via nearest-node lookup.
    pub fn into_target(self) -> Target {
        let m = self.m;
        let n = self.n;
        Target::dense(m, move |point: &[f64]| {
            let mut flat = 0usize;
            for &x in point {
                let k = Self::nearest_index(p_transform(x), n);
                flat = flat * (n + 1) + k;
            }
            self.values[flat]
        })
    }
}

fn parse_header(header: &str) -> Result<(usize, usize), TableError> {
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "#" || fields[1] != "nodes" {
        return Err(TableError::BadHeader(header.to_string()));
    }
    let m = fields[2]
        .strip_prefix("m=")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| TableError::BadHeader(header.to_string()))?;
    let n = fields[3]
        .strip_prefix("n=")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| TableError::BadHeader(header.to_string()))?;
    Ok((m, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_transform_round_trip() {
        for x in [0.0, 0.5, 1.0, 3.0, 99.0] {
            let p = p_transform(x);
            assert!((0.0..1.0).contains(&p));
            assert!((p_inverse(p) - x).abs() <= 1e-12 * x.max(1.0));
        }
        assert_eq!(p_transform(1.0), 0.5);
        assert_eq!(p_transform(0.0), 0.0);
    }

    #[test]
    fn separable_eval_matches_hand_values() {
        let f = Target::separable_product(vec![axis_ratio(), axis_ratio()]);
        assert_eq!(f.eval(&[1.0, 1.0]), 0.25);
        let g = Target::separable_sum(vec![axis_ratio_squared(), axis_ratio_squared()]);
        assert_eq!(g.eval(&[1.0, 1.0]), 0.5);
        let c = Target::constant(2, 3.5);
        assert_eq!(c.eval(&[7.0, 0.1]), 3.5);
    }

    #[test]
    fn table_parse_round_trip() {
        let text = "# nodes m=1 n=2\n0 1.0\n1 0.5\n2 -0.25\n";
        let table = NodeTable::parse(text).unwrap();
        assert_eq!(table.m(), 1);
        assert_eq!(table.n(), 2);
        assert_eq!(table.value_at(&[0]), 1.0);
        assert_eq!(table.value_at(&[2]), -0.25);
        let reparsed = NodeTable::parse(&table.to_text()).unwrap();
        for k in 0..=2 {
            assert_eq!(reparsed.value_at(&[k]), table.value_at(&[k]));
        }
    }

    #[test]
    fn table_rejects_malformed_input() {
        assert!(matches!(
            NodeTable::parse(""),
            Err(TableError::MissingHeader)
        ));
        assert!(matches!(
            NodeTable::parse("# lattice m=1 n=2\n"),
            Err(TableError::BadHeader(_))
        ));
        assert!(matches!(
            NodeTable::parse("# nodes m=1 n=1\n0 1.0\n"),
            Err(TableError::MissingNodes { count: 1 })
        ));
        assert!(matches!(
            NodeTable::parse("# nodes m=1 n=1\n0 1.0\n0 2.0\n1 0.0\n"),
            Err(TableError::DuplicateNode { line: 3 })
        ));
        assert!(matches!(
            NodeTable::parse("# nodes m=1 n=1\n0 1.0\n3 2.0\n"),
            Err(TableError::IndexOutOfRange { line: 3, n: 1 })
        ));
        assert!(matches!(
            NodeTable::parse("# nodes m=1 n=1\n0 nan\n1 0.0\n"),
            Err(TableError::NonFiniteValue { .. })
        ));
    }

    #[test]
    fn nearest_index_recovers_lattice_points() {
        // node(n, k) = k/(n-k+1) maps to p = k/(n+1) under the transform;
        // the nearest-index lookup must send each node back to its own k.
        for n in [1usize, 2, 7, 40] {
            for k in 0..=n {
                let node = k as f64 / (n - k + 1) as f64;
                let p = p_transform(node);
                assert_eq!(NodeTable::nearest_index(p, n), k, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn table_target_interpolates_by_nearest_node() {
        let text = "# nodes m=2 n=1\n0 0 0.0\n0 1 1.0\n1 0 2.0\n1 1 3.0\n";
        let f = NodeTable::parse(text).unwrap().into_target();
        assert_eq!(f.dimension(), 2);
        // node(1, 1) = 1.0: exact lattice point.
        assert_eq!(f.eval(&[0.0, 1.0]), 1.0);
        assert_eq!(f.eval(&[1.0, 1.0]), 3.0);
        // x = 0.1 has p ~ 0.09, nearest k = 0.
        assert_eq!(f.eval(&[0.1, 0.1]), 0.0);
    }
}
