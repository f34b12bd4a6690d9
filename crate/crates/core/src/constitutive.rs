//! Constitutive laws `theta -> u[theta]` given as Fourier multipliers.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{SpectralField, VectorField};
use crate::grid::{k_norm, Grid};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Divergence tolerance relative to the largest symbol entry.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    Sqg,
    Mg,
    Custom,
}

impl SymbolKind {
    pub fn tag(self) -> &'static str {
        match self {
            SymbolKind::Sqg => "SQG",
            SymbolKind::Mg => "MG",
            SymbolKind::Custom => "CUSTOM",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "SQG" => Some(SymbolKind::Sqg),
            "MG" => Some(SymbolKind::Mg),
            "CUSTOM" => Some(SymbolKind::Custom),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MultiplierSymbol {
    /// Perpendicular Riesz transform on the 2-torus.
    Sqg,
    /// Magnetogeostrophic multiplier on the 3-torus with viscosity `nu`.
    Mg { nu: f64 },
    /// Tabulated values on a fixed grid.
    Custom(Arc<SymbolTable>),
}

impl MultiplierSymbol {
    pub fn mg(nu: f64) -> Result<Self> {
        check_nu(nu)?;
        Ok(MultiplierSymbol::Mg { nu })
    }

    pub fn dim(&self) -> usize {
        match self {
            MultiplierSymbol::Sqg => 2,
            MultiplierSymbol::Mg { .. } => 3,
            MultiplierSymbol::Custom(t) => t.grid.dim(),
        }
    }

    pub fn kind(&self) -> SymbolKind {
        match self {
            MultiplierSymbol::Sqg => SymbolKind::Sqg,
            MultiplierSymbol::Mg { .. } => SymbolKind::Mg,
            MultiplierSymbol::Custom(_) => SymbolKind::Custom,
        }
    }

    pub fn nu(&self) -> f64 {
        match self {
            MultiplierSymbol::Mg { nu } => *nu,
            MultiplierSymbol::Custom(t) => t.nu,
            MultiplierSymbol::Sqg => 0.0,
        }
    }

    /// Whether the symbol is defined to vanish on the `k_3 = 0` plane, in
    /// which case scalars carried by the solver are kept off that plane too.
    pub fn vanishes_on_horizontal_plane(&self) -> bool {
        matches!(self, MultiplierSymbol::Mg { .. })
    }

    /// `M(k)`; the third entry is zero in two dimensions. Custom symbols
    /// return zero outside their table.
    pub fn eval(&self, k: &[i64; 3]) -> [Complex64; 3] {
        match self {
            MultiplierSymbol::Sqg => {
                let s = sqg_symbol([k[0], k[1]]);
                [s[0], s[1], ZERO]
            }
            MultiplierSymbol::Mg { nu } => mg_values(k, *nu),
            MultiplierSymbol::Custom(t) => match t.grid.index_of(&k[..t.grid.dim()]) {
                Some(i) => t.values[i],
                None => [ZERO; 3],
            },
        }
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if nu > 0.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("MG viscosity must be positive, got {nu}")))
    }
}

/// `(-i k_2/|k|, i k_1/|k|)`, and zero at the origin.
pub fn sqg_symbol(k: [i64; 2]) -> [Complex64; 2] {
    if k == [0, 0] {
        return [ZERO; 2];
    }
    let r = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
    [
        Complex64::new(0.0, -(k[1] as f64) / r),
        Complex64::new(0.0, k[0] as f64 / r),
    ]
}

/// The magnetogeostrophic multiplier; zero whenever `k_3 = 0`.
pub fn mg_symbol(k: [i64; 3], nu: f64) -> Result<[Complex64; 3]> {
    check_nu(nu)?;
    Ok(mg_values(&k, nu))
}

fn mg_values(k: &[i64; 3], nu: f64) -> [Complex64; 3] {
    if k[2] == 0 {
        return [ZERO; 3];
    }
    let (k1, k2, k3) = (k[0] as f64, k[1] as f64, k[2] as f64);
    let q = k1 * k1 + k2 * k2 + k3 * k3;
    let b = k2 * k2 + nu * q * q;
    let d = q * k3 * k3 + b * b;
    // numerators are exact integers for integer nu, so each entry is the
    // correctly rounded rational value
    [
        Complex64::new((k2 * k3 * q - k1 * k3 * b) / d, 0.0),
        Complex64::new((-k1 * k3 * q - k2 * k3 * b) / d, 0.0),
        Complex64::new((k1 * k1 + k2 * k2) * b / d, 0.0),
    ]
}

/// Dense symbol values over a grid, in the grid's coefficient order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTable {
    grid: Grid,
    kind: SymbolKind,
    nu: f64,
    values: Vec<[Complex64; 3]>,
}

impl SymbolTable {
    pub fn build(sym: &MultiplierSymbol, grid: Grid) -> Result<Self> {
        if sym.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                symbol: sym.dim(),
                field: grid.dim(),
            });
        }
        if let MultiplierSymbol::Custom(t) = sym {
            if t.grid != grid {
                return Err(Error::GridMismatch(format!(
                    "custom symbol tabulated on {:?}, requested {:?}",
                    t.grid, grid
                )));
            }
            return Ok((**t).clone());
        }
        let values = (0..grid.len())
            .map(|i| {
                if i == 0 || grid.is_nyquist(i) {
                    [ZERO; 3]
                } else {
                    sym.eval(&grid.k_at(i))
                }
            })
            .collect();
        Ok(SymbolTable {
            grid,
            kind: sym.kind(),
            nu: sym.nu(),
            values,
        })
    }

    /// Tabulated custom symbol. Rejects tables that are not divergence-free,
    /// not conjugate-symmetric, nonzero at the origin or non-finite.
    pub fn custom(grid: Grid, nu: f64, mut values: Vec<[Complex64; 3]>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if values.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("symbol table"));
        }
        if values[0].iter().any(|z| *z != ZERO) {
            return Err(Error::InvalidParameter("symbol must vanish at k = 0".into()));
        }
        for i in 0..grid.len() {
            if grid.is_nyquist(i) {
                values[i] = [ZERO; 3];
            }
            if grid.dim() == 2 {
                values[i][2] = ZERO;
            }
        }
        let max = values.iter().flatten().fold(0.0f64, |m, z| m.max(z.norm()));
        let tol = DIVERGENCE_TOLERANCE * max.max(f64::MIN_POSITIVE);
        for i in 0..grid.len() {
            let k = grid.k_at(i);
            let div = divergence(&k, &values[i]);
            if div > tol * k_norm(&k).max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "symbol not divergence-free at {k:?}: |k.M| = {div:e}"
                )));
            }
            let j = grid.neg_index(i);
            for c in 0..3 {
                if (values[j][c] - values[i][c].conj()).norm() > tol {
                    return Err(Error::SymmetryViolated {
                        defect: (values[j][c] - values[i][c].conj()).norm(),
                        tolerance: tol,
                    });
                }
            }
        }
        Ok(SymbolTable {
            grid,
            kind: SymbolKind::Custom,
            nu,
            values,
        })
    }

    /// Reassembles a table read from storage under its recorded kind.
    pub fn from_parts(grid: Grid, kind: SymbolKind, nu: f64, values: Vec<[Complex64; 3]>) -> Result<Self> {
        let t = match kind {
            SymbolKind::Custom => return SymbolTable::custom(grid, nu, values),
            SymbolKind::Sqg => SymbolTable::build(&MultiplierSymbol::Sqg, grid)?,
            SymbolKind::Mg => SymbolTable::build(&MultiplierSymbol::mg(nu)?, grid)?,
        };
        if t.values == values {
            Ok(t)
        } else {
            Err(Error::Format(format!("{} table does not match its closed form", kind.tag())))
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn kind(&self) -> SymbolKind {
        self.kind
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn values(&self) -> &[[Complex64; 3]] {
        &self.values
    }

    pub fn vanishes_on_horizontal_plane(&self) -> bool {
        self.kind == SymbolKind::Mg
    }

    /// `u_j` coefficients for each component.
    pub fn apply(&self, theta: &[Complex64], out: &mut [Vec<Complex64>]) {
        for (j, comp) in out.iter_mut().enumerate() {
            for ((o, t), m) in comp.iter_mut().zip(theta).zip(&self.values) {
                *o = m[j] * t;
            }
        }
    }
}

fn divergence(k: &[i64; 3], m: &[Complex64; 3]) -> f64 {
    (m[0] * k[0] as f64 + m[1] * k[1] as f64 + m[2] * k[2] as f64).norm()
}

/// `u_j = (M_j theta_hat)^vee`, evaluated modewise.
pub fn velocity_from_scalar(theta: &SpectralField, sym: &MultiplierSymbol) -> Result<VectorField> {
    let grid = theta.grid();
    let table = SymbolTable::build(sym, grid)?;
    velocity_from_table(theta, &table)
}

pub fn velocity_from_table(theta: &SpectralField, table: &SymbolTable) -> Result<VectorField> {
    let grid = theta.grid();
    if table.grid != grid {
        return Err(Error::GridMismatch(format!(
            "symbol table on {:?}, field on {:?}",
            table.grid, grid
        )));
    }
    let mut comps = vec![vec![ZERO; grid.len()]; grid.dim()];
    table.apply(theta.coeffs(), &mut comps);
    let fields = comps
        .into_iter()
        .map(|c| SpectralField::from_raw(grid, c))
        .collect();
    VectorField::new(fields)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub kind: SymbolKind,
    /// `max |k . M(k)|` (divergence-free symbol).
    pub a1_max_divergence: f64,
    /// The BMO mapping property has no lattice analogue and is never audited.
    pub a2_checked: bool,
    /// `max |M(k)|` (order-zero boundedness).
    pub a3_order0_constant: f64,
    /// `max |k|^2 |M(k)|` (smoothing of order two).
    pub a3prime_order2_constant: f64,
    /// Vanishing at the origin, and on the `k_3 = 0` plane where required.
    pub a4_ok: bool,
    pub k_max_audited: i64,
}

impl std::fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "symbol                   {}", self.kind.tag())?;
        writeln!(f, "k_max                    {}", self.k_max_audited)?;
        writeln!(f, "A1  max |k.M(k)|         {:e}", self.a1_max_divergence)?;
        writeln!(f, "A2  BMO bound            not checked")?;
        writeln!(f, "A3  max |M(k)|           {}", self.a3_order0_constant)?;
        writeln!(f, "A3' max |k|^2 |M(k)|     {}", self.a3prime_order2_constant)?;
        write!(f, "A4  vanishing            {}", if self.a4_ok { "ok" } else { "FAILED" })
    }
}

/// Brute-force scan of `0 < max_j |k_j| <= k_max`.
pub fn audit_assumptions(sym: &MultiplierSymbol, k_max: i64) -> Result<AssumptionReport> {
    if k_max < 4 {
        return Err(Error::InvalidParameter(format!("k_max must be at least 4, got {k_max}")));
    }
    let dim = sym.dim();
    let third = if dim == 3 { k_max } else { 0 };
    let mut a1 = 0.0f64;
    let mut a3 = 0.0f64;
    let mut a3p = 0.0f64;
    let mut a4 = sym.eval(&[0, 0, 0]).iter().all(|z| *z == ZERO);
    let plane = sym.vanishes_on_horizontal_plane();
    for k1 in -k_max..=k_max {
        for k2 in -k_max..=k_max {
            for k3 in -third..=third {
                let k = [k1, k2, k3];
                if k == [0, 0, 0] {
                    continue;
                }
                let m = sym.eval(&k);
                let size = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                a1 = a1.max(divergence(&k, &m));
                a3 = a3.max(size);
                let q = (k1 * k1 + k2 * k2 + k3 * k3) as f64;
                a3p = a3p.max(q * size);
                if plane && k3 == 0 && size != 0.0 {
                    a4 = false;
                }
            }
        }
    }
    Ok(AssumptionReport {
        kind: sym.kind(),
        a1_max_divergence: a1,
        a2_checked: false,
        a3_order0_constant: a3,
        a3prime_order2_constant: a3p,
        a4_ok: a4,
        k_max_audited: k_max,
    })
}
