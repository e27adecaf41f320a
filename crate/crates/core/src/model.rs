//! Discrete-velocity models: a finite speed set `c_i` and a quadratic
//! collision tensor `a_ijk`, so that the production rate of species `i` is
//! `sum_jk a_ijk u_j u_k`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Absolute tolerance on the conservation identities.
pub const CONSERVATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Term {
    i: usize,
    j: usize,
    k: usize,
    a: f64,
}

/// Speed set plus symmetrized collision tensor.
///
/// The tensor is stored dense (`N^3` entries) together with the list of its
/// nonzero entries, which is what the collision kernels iterate over.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityModel {
    speeds: Vec<[f64; 2]>,
    coeffs: Vec<f64>,
    terms: Vec<Term>,
    names: Vec<String>,
}

/// Local production rates `sum_jk a_ijk u_j u_k`, one per species.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionRates {
    pub rates: Vec<f64>,
}

impl CollisionRates {
    pub fn total(&self) -> f64 {
        self.rates.iter().sum()
    }
}

/// Largest absolute violation of each conservation family, over all `(j, k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
    pub valid: bool,
}

impl VelocityModel {
    /// Builds a model from speeds and a dense row-major tensor `coeffs[(i*N + j)*N + k]`.
    /// The tensor is symmetrized in `(j, k)`.
    pub fn new(
        speeds: Vec<[f64; 2]>,
        coeffs: Vec<f64>,
        names: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = speeds.len();
        if n == 0 {
            return Err(Error::InvalidModel(
                "at least one species is required".into(),
            ));
        }
        if speeds.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidModel("speeds must be finite".into()));
        }
        if coeffs.len() != n * n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n * n,
                got: coeffs.len(),
            });
        }
        if coeffs.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidModel(
                "collision coefficients must be finite".into(),
            ));
        }
        let names = match names {
            Some(names) if names.len() != n => {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: names.len(),
                })
            }
            Some(names) => names,
            None => (1..=n).map(|i| format!("u{i}")).collect(),
        };

        let mut sym = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let a = coeffs[(i * n + j) * n + k];
                    let b = coeffs[(i * n + k) * n + j];
                    sym[(i * n + j) * n + k] = 0.5 * (a + b);
                }
            }
        }
        let mut terms = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let a = sym[(i * n + j) * n + k];
                    if a != 0.0 {
                        terms.push(Term { i, j, k, a });
                    }
                }
            }
        }
        Ok(Self {
            speeds,
            coeffs: sym,
            terms,
            names,
        })
    }

    /// The two-dimensional Broadwell model with speeds
    /// `(1,1), (1,-1), (-1,-1), (-1,1)` and the exchange `u1 u3 <-> u2 u4`.
    pub fn broadwell2d() -> Self {
        let speeds = vec![[1.0, 1.0], [1.0, -1.0], [-1.0, -1.0], [-1.0, 1.0]];
        let n = 4;
        let mut coeffs = vec![0.0; n * n * n];
        let mut set = |i: usize, j: usize, k: usize, a: f64| coeffs[(i * n + j) * n + k] = a;
        // species 1 and 3 gain u2 u4 and lose u1 u3; species 2 and 4 the reverse
        for (i, sign) in [(0, 1.0), (1, -1.0), (2, 1.0), (3, -1.0)] {
            set(i, 1, 3, sign);
            set(i, 0, 2, -sign);
        }
        let names = ["u1", "u2", "u3", "u4"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        Self::new(speeds, coeffs, Some(names)).expect("Broadwell model is well formed")
    }

    /// Same speeds as `self`, collision tensor identically zero.
    pub fn without_collisions(&self) -> Self {
        let n = self.n();
        Self::new(
            self.speeds.clone(),
            vec![0.0; n * n * n],
            Some(self.names.clone()),
        )
        .expect("zero tensor is well formed")
    }

    pub fn n(&self) -> usize {
        self.speeds.len()
    }

    pub fn speeds(&self) -> &[[f64; 2]] {
        &self.speeds
    }

    pub fn speed(&self, i: usize) -> [f64; 2] {
        self.speeds[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn coeff(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.n();
        self.coeffs[(i * n + j) * n + k]
    }

    /// `C = max_i |c_i|`.
    pub fn max_speed(&self) -> f64 {
        self.speeds
            .iter()
            .map(|c| c[0].hypot(c[1]))
            .fold(0.0, f64::max)
    }

    pub fn has_collisions(&self) -> bool {
        !self.terms.is_empty()
    }

    /// True when speeds and tensor coincide with [`VelocityModel::broadwell2d`].
    pub fn is_broadwell(&self) -> bool {
        let b = Self::broadwell2d();
        self.speeds == b.speeds && self.coeffs == b.coeffs
    }

    pub fn validate_conservation(&self) -> ValidationReport {
        let n = self.n();
        let (mut mass, mut momentum, mut energy) = (0.0f64, 0.0f64, 0.0f64);
        for j in 0..n {
            for k in 0..n {
                let (mut m, mut px, mut py, mut e) = (0.0, 0.0, 0.0, 0.0);
                for i in 0..n {
                    let a = self.coeff(i, j, k);
                    let c = self.speeds[i];
                    m += a;
                    px += c[0] * a;
                    py += c[1] * a;
                    e += (c[0] * c[0] + c[1] * c[1]) * a;
                }
                mass = mass.max(m.abs());
                momentum = momentum.max(px.abs()).max(py.abs());
                energy = energy.max(e.abs());
            }
        }
        ValidationReport {
            mass,
            momentum,
            energy,
            valid: mass <= CONSERVATION_TOL
                && momentum <= CONSERVATION_TOL
                && energy <= CONSERVATION_TOL,
        }
    }

    pub fn collision_rhs(&self, u: &[f64]) -> Result<CollisionRates> {
        if u.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: u.len(),
            });
        }
        let mut rates = vec![0.0; self.n()];
        self.collision_rhs_into(u, &mut rates);
        Ok(CollisionRates { rates })
    }

    /// Unchecked kernel: `out` and `u` must both have length `N`.
    #[inline]
    pub fn collision_rhs_into(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|r| *r = 0.0);
        for t in &self.terms {
            out[t.i] += t.a * (u[t.j] * u[t.k]);
        }
    }

    /// Parses the plain-text model format:
    ///
    /// ```text
    /// N=4
    /// c 1 1
    /// c 1 -1
    /// ...
    /// a 1 2 4 0.5
    /// ```
    ///
    /// Indices are 1-based; tensor entries not listed are zero. Blank lines
    /// and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut speeds = Vec::new();
        let mut coeffs: Vec<f64> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |msg: String| Error::ModelParse { line: line_no, msg };
            let Some(count) = n else {
                let rest = line
                    .strip_prefix("N=")
                    .ok_or_else(|| perr(format!("expected header `N=<int>`, found `{line}`")))?;
                let count: usize = rest
                    .trim()
                    .parse()
                    .map_err(|_| perr(format!("bad species count `{rest}`")))?;
                if count == 0 {
                    return Err(perr("N must be at least 1".into()));
                }
                n = Some(count);
                coeffs = vec![0.0; count * count * count];
                continue;
            };
            let mut parts = line.split_whitespace();
            let tag = parts.next().unwrap_or_default();
            let fields: Vec<&str> = parts.collect();
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| perr(format!("bad number `{s}`")))
            };
            let idx = |s: &str| -> Result<usize> {
                let i: usize = s.parse().map_err(|_| perr(format!("bad index `{s}`")))?;
                if i == 0 || i > count {
                    return Err(perr(format!("index {i} out of range 1..={count}")));
                }
                Ok(i - 1)
            };
            match (tag, fields.len()) {
                ("c", 2) => {
                    if speeds.len() == count {
                        return Err(perr(format!("more than N={count} speed lines")));
                    }
                    speeds.push([num(fields[0])?, num(fields[1])?]);
                }
                ("a", 4) => {
                    if speeds.len() != count {
                        return Err(perr("tensor entries must follow all N speed lines".into()));
                    }
                    let (i, j, k) = (idx(fields[0])?, idx(fields[1])?, idx(fields[2])?);
                    coeffs[(i * count + j) * count + k] = num(fields[3])?;
                }
                _ => return Err(perr(format!("unrecognised line `{line}`"))),
            }
        }
        let count = n.ok_or(Error::ModelParse {
            line: 1,
            msg: "missing header `N=<int>`".into(),
        })?;
        if speeds.len() != count {
            return Err(Error::ModelParse {
                line: text.lines().count(),
                msg: format!("expected {count} speed lines, found {}", speeds.len()),
            });
        }
        Self::new(speeds, coeffs, None)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Serializes to the plain-text format accepted by [`VelocityModel::parse`].
    pub fn to_text(&self) -> String {
        let n = self.n();
        let mut s = format!("N={n}\n");
        for c in &self.speeds {
            let _ = writeln!(s, "c {} {}", c[0], c[1]);
        }
        for t in &self.terms {
            let _ = writeln!(s, "a {} {} {} {}", t.i + 1, t.j + 1, t.k + 1, t.a);
        }
        s
    }
}
