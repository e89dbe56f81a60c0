//! Points gamma of the sigma-split tori T_nu(F) inside the symmetric space,
//! their eigenvalues and stable-orbit invariants, and the parametrization of
//! rational orbits by the two-group D_gamma with its order-2 characters.

use crate::error::{Error, Result};
use crate::field::{FieldContext, MuLabel, Nu, SquareClass};
use crate::halfint::HalfInt;
use crate::scalar::{hensel_sqrt, quad_symbol, square_class, Coord, Ext, PadicScalar, Tower};
use serde::{Deserialize, Serialize};

/// Isomorphism class of the centralizer torus.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum TorusType {
    I,
    II,
    III,
}

impl TorusType {
    pub fn as_str(self) -> &'static str {
        match self {
            TorusType::I => "I",
            TorusType::II => "II",
            TorusType::III => "III",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "I" | "i" | "1" => Ok(TorusType::I),
            "II" | "ii" | "2" => Ok(TorusType::II),
            "III" | "iii" | "3" => Ok(TorusType::III),
            other => Err(Error::BadInput(format!("unknown torus type {other:?}"))),
        }
    }
}

impl std::fmt::Display for TorusType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// nu = xi^2 gives type I, nu = 1 type II, and the two ramified choices
/// give type III.
pub fn classify_torus(nu: Nu) -> TorusType {
    match nu {
        Nu::Xi2 => TorusType::I,
        Nu::One => TorusType::II,
        Nu::Pi | Nu::Xi2Pi => TorusType::III,
    }
}

/// Order of the F-points of the stabilizer, i.e. the prefactor constant
/// 1/#G_{1 gamma}(F) shared by the closed forms and both oracles.
pub fn stabilizer_order(t: TorusType) -> u32 {
    match t {
        TorusType::I => 2,
        TorusType::II | TorusType::III => 4,
    }
}

/// The group D_gamma of rational-orbit classes: {1, pi} in type I, the full
/// four-group of square classes in types II and III.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EndoscopicGroup {
    pub gamma_type: TorusType,
    pub elements: Vec<SquareClass>,
}

impl EndoscopicGroup {
    pub fn for_type(t: TorusType) -> Self {
        let elements = match t {
            TorusType::I => vec![SquareClass::One, SquareClass::Pi],
            _ => SquareClass::ALL.to_vec(),
        };
        EndoscopicGroup { gamma_type: t, elements }
    }

    /// Group law (exponent 2). In type I the xi^2-component is collapsed.
    pub fn op(&self, a: SquareClass, b: SquareClass) -> SquareClass {
        let c = a.mul(b);
        match self.gamma_type {
            TorusType::I => self.reduce(c),
            _ => c,
        }
    }

    /// Image of a square class in D_gamma (norm classes for type I).
    pub fn reduce(&self, c: SquareClass) -> SquareClass {
        match self.gamma_type {
            TorusType::I => {
                if c.v() % 2 == 0 {
                    SquareClass::One
                } else {
                    SquareClass::Pi
                }
            }
            _ => c,
        }
    }

    /// Image of a nonzero F-scalar under F^x -> D_gamma.
    pub fn class_of(&self, ctx: &FieldContext, a: &Coord) -> Result<SquareClass> {
        Ok(self.reduce(square_class(ctx, a)?))
    }

    pub fn nontrivial_characters(&self) -> Vec<KappaCharacter> {
        match self.gamma_type {
            TorusType::I => vec![KappaCharacter { s: SquareClass::Pi, order2: true }],
            _ => SquareClass::ALL
                .iter()
                .filter(|&&s| s != SquareClass::One)
                .map(|&s| KappaCharacter { s, order2: false })
                .collect(),
        }
    }
}

/// An order-2 character of D_gamma. For the four-group, kappa_s is the
/// unique nontrivial character with kappa_s(s) = 1; for the two-element
/// group `order2` marks the single nontrivial character.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KappaCharacter {
    pub s: SquareClass,
    /// Character of the order-2 group F^x / N(E^x) (type I).
    pub order2: bool,
}

impl KappaCharacter {
    pub fn value(&self, e: SquareClass) -> i8 {
        if self.order2 {
            // the unique nontrivial character of {1, pi}
            return if e.v() % 2 == 0 { 1 } else { -1 };
        }
        let flip = match self.s {
            SquareClass::Xi2 => e.v() % 2 == 1,
            SquareClass::Pi => e.twisted(),
            SquareClass::Xi2Pi => (e.v() % 2 == 1) ^ e.twisted(),
            SquareClass::One => false,
        };
        if flip {
            -1
        } else {
            1
        }
    }

    /// Character value on the class of a nonzero F-scalar.
    pub fn value_on_scalar(&self, ctx: &FieldContext, a: &Coord) -> Result<i8> {
        Ok(self.value(square_class(ctx, a)?))
    }

    pub fn label(&self) -> String {
        if self.order2 {
            "kappa1".to_string()
        } else {
            format!("kappa_{}", self.s.as_str())
        }
    }
}

/// delta_N(a): 1 iff N + v(a) is even. Only integral N occur in the
/// formulas that consume it.
pub fn delta(n: HalfInt, a: SquareClass) -> i64 {
    assert!(n.is_integral(), "delta at a non-integral index");
    if (n.to_int() + a.v()) % 2 == 0 {
        1
    } else {
        0
    }
}

// ---------------------------------------------------------------------------
// Symmetric points
// ---------------------------------------------------------------------------

/// A point of T_nu(F): coordinates (x, y, z) in E with
/// N(x) + nu N(y) = 1, N(z) = 1, Tr(x theta(y)) = 0, twisted to the
/// rational-orbit representative gamma_mu with off-diagonal entries
/// (mu y, mu^{-1} nu y).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetricPoint {
    pub ctx: FieldContext,
    pub nu: Nu,
    pub mu: MuLabel,
    pub x: Ext,
    pub y: Ext,
    pub z: Ext,
}

impl SymmetricPoint {
    pub fn new(ctx: FieldContext, nu: Nu, x: Ext, y: Ext, z: Ext) -> Self {
        SymmetricPoint { ctx, nu, mu: SquareClass::One, x, y, z }
    }

    pub fn gamma_type(&self) -> TorusType {
        classify_torus(self.nu)
    }

    /// The parameter nu as an exact F-scalar.
    pub fn nu_coord(&self) -> Coord {
        class_rep_coord(&self.ctx, self.nu)
    }

    /// The twist mu as an exact F-scalar.
    pub fn mu_coord(&self) -> Coord {
        class_rep_coord(&self.ctx, self.mu)
    }

    /// Verify the torus membership conditions at certified precision.
    pub fn check_unitary(&self) -> Result<()> {
        let ctx = &self.ctx;
        let nx = Ext::norm(ctx, &self.x);
        let ny = Ext::norm(ctx, &self.y);
        let lhs = Coord::add(ctx, &nx, &Coord::mul(ctx, &self.nu_coord(), &ny));
        if !Coord::congruent(ctx, &lhs, &Coord::one(ctx)) {
            return Err(Error::BadInput("N(x) + nu N(y) != 1".into()));
        }
        if !Coord::congruent(ctx, &Ext::norm(ctx, &self.z), &Coord::one(ctx)) {
            return Err(Error::BadInput("N(z) != 1".into()));
        }
        let xty = Ext::mul(ctx, &self.x, &Ext::theta(ctx, &self.y));
        match &xty.a {
            Coord::Zero | Coord::Small { .. } => Ok(()),
            Coord::Unit { .. } => Err(Error::BadInput("Tr(x theta(y)) != 0".into())),
        }
    }

    /// Eigenvalues (x + sqrt(nu) y, z, x - sqrt(nu) y). For types I and II
    /// sqrt(nu) lies in E; type III lands in the genuine tower.
    pub fn eigenvalues(&self) -> [PadicScalar; 3] {
        let ctx = &self.ctx;
        match self.nu {
            Nu::One | Nu::Xi2 => {
                let root = if self.nu == Nu::One { Ext::one(ctx) } else { Ext::xi(ctx) };
                let ry = Ext::mul(ctx, &root, &self.y);
                [
                    PadicScalar::E(Ext::add(ctx, &self.x, &ry)),
                    PadicScalar::E(self.z.clone()),
                    PadicScalar::E(Ext::sub(ctx, &self.x, &ry)),
                ]
            }
            nu => {
                let l1 = Tower { a: self.x.clone(), b: self.y.clone(), nu };
                let l3 = Tower::conj(ctx, &l1);
                [
                    PadicScalar::L(l1),
                    PadicScalar::L(Tower::from_e(self.z.clone(), nu)),
                    PadicScalar::L(l3),
                ]
            }
        }
    }

    /// Stable-orbit invariants plus the symbol cache the closed forms need.
    ///
    /// The six eigenvalue combinations are assembled structurally from
    /// (x, y, z) rather than by subtracting the assembled eigenvalues, so
    /// exact zeros (x = 0, or an exact eigenvalue relation) stay exact
    /// instead of degrading into uncertified cancellation.
    pub fn invariants(&self) -> Result<OrbitInvariants> {
        self.check_unitary()?;
        let ctx = &self.ctx;
        let two = Coord::from_int(ctx, 2);
        let x_plus_z = Ext::add(ctx, &self.x, &self.z);
        let x_minus_z = Ext::sub(ctx, &self.x, &self.z);
        let two_x = Ext::mul_f(ctx, &self.x, &two);
        let two_y = Ext::mul_f(ctx, &self.y, &two);
        // each combination is (E-part) + (coefficient of sqrt(nu)) sqrt(nu)
        let combos: [(Ext, Ext); 6] = [
            (x_minus_z.clone(), self.y.clone()),              // lambda1 - lambda2
            (Ext::zero(), two_y.clone()),                     // lambda1 - lambda3
            (Ext::neg(ctx, &x_minus_z), self.y.clone()),      // lambda2 - lambda3
            (x_plus_z.clone(), self.y.clone()),               // lambda1 + lambda2
            (two_x, Ext::zero()),                             // lambda1 + lambda3
            (x_plus_z, Ext::neg(ctx, &self.y)),               // lambda2 + lambda3
        ];
        let val_of = |e_part: &Ext, root_part: &Ext| -> Result<Option<HalfInt>> {
            // assemble e_part + sqrt(nu) root_part at the right level
            let total = match self.nu {
                Nu::One => Ext::add(ctx, e_part, root_part),
                Nu::Xi2 => {
                    Ext::add(ctx, e_part, &Ext::mul(ctx, &Ext::xi(ctx), root_part))
                }
                nu => {
                    let t = crate::scalar::Tower { a: e_part.clone(), b: root_part.clone(), nu };
                    return match t.exact_val2() {
                        Ok(v) => Ok(Some(HalfInt::from_twice(v))),
                        Err(Error::ZeroValuation) => Ok(None),
                        Err(e) => Err(e),
                    };
                }
            };
            match total.exact_val() {
                Ok(v) => Ok(Some(HalfInt::from_int(v))),
                Err(Error::ZeroValuation) => Ok(None),
                Err(e) => Err(e),
            }
        };
        let mut vals: Vec<Option<HalfInt>> = Vec::with_capacity(6);
        for (e_part, root_part) in &combos {
            vals.push(val_of(e_part, root_part)?);
        }
        // regularity: the differences must have finite valuation
        let m12 = vals[0].ok_or(Error::NotRegular)?;
        let m13 = vals[1].ok_or(Error::NotRegular)?;
        let m23 = vals[2].ok_or(Error::NotRegular)?;
        // the sums may genuinely vanish (lambda_i = -lambda_j); None = +infinity
        let n12 = vals[3];
        let n13 = vals[4];
        let n23 = vals[5];

        let x_is_zero = self.x.is_exact_zero();
        let v_y = HalfInt::from_int(self.y.exact_val()?);
        let v_x = if x_is_zero { None } else { Some(HalfInt::from_int(self.x.exact_val()?)) };

        let nonneg = [m12, m13, m23].iter().all(|v| !v.is_negative())
            && [n12, n13, n23].iter().all(|v| v.is_none_or(|h| !h.is_negative()));

        let (z_x, z_y) = if x_is_zero || self.y.is_exact_zero() {
            (None, None)
        } else {
            // z = z_x x + z_y y with
            //   z_x = (x^2 - nu y^2 + z^2) / (2xz),
            //   z_y = (-x^2 + nu y^2 + z^2) / (2yz).
            let nu = self.nu_coord();
            let x2 = Ext::mul(ctx, &self.x, &self.x);
            let nuy2 = Ext::mul_f(ctx, &Ext::mul(ctx, &self.y, &self.y), &nu);
            let z2 = Ext::mul(ctx, &self.z, &self.z);
            let num_zx = Ext::add(ctx, &Ext::sub(ctx, &x2, &nuy2), &z2);
            let num_zy = Ext::add(ctx, &Ext::sub(ctx, &nuy2, &x2), &z2);
            let two = Coord::from_int(ctx, 2);
            let den_zx = Ext::mul_f(ctx, &Ext::mul(ctx, &self.x, &self.z), &two);
            let den_zy = Ext::mul_f(ctx, &Ext::mul(ctx, &self.y, &self.z), &two);
            let zx = Ext::div(ctx, &num_zx, &den_zx)?.expect_f(ctx)?;
            let zy = Ext::div(ctx, &num_zy, &den_zy)?.expect_f(ctx)?;
            (Some(zx), Some(zy))
        };

        // Quadratic symbols consumed by the closed forms; only meaningful on
        // the non-vanishing branch with x != 0. A symbol whose argument sits
        // below certified depth (possible when the case formulas do not need
        // it, e.g. z_y^2 = nu exactly) is recorded as absent-uncertified:
        // a consumer that does need it then reports PrecisionExhausted.
        let symbols = if nonneg && !x_is_zero {
            let zy = z_y.as_ref().expect("z_y exists when x, y != 0");
            let nu = self.nu_coord();
            let zy2_minus_nu = Coord::sub(ctx, &Coord::mul(ctx, zy, zy), &nu);
            let mut uncertified = false;
            let mut tolerate = |r: Result<i8>| -> Option<i8> {
                match r {
                    Ok(v) => Some(v),
                    Err(_) => {
                        uncertified = true;
                        None
                    }
                }
            };
            let sym_zy2_nu = tolerate(quad_symbol(ctx, &zy2_minus_nu));
            let class_neg_zy = match square_class(ctx, &Coord::neg(ctx, zy)) {
                Ok(c) => Some(c),
                Err(_) => {
                    uncertified = true;
                    None
                }
            };
            // -2(z_y + sqrt(z_y^2 - 1)) for the type II character formulas,
            // defined only when z_y^2 - 1 is a square.
            let class_m2_zy_root = if self.nu == Nu::One && sym_zy2_nu == Some(1) {
                let root = hensel_sqrt(ctx, &zy2_minus_nu)?;
                let val = Coord::scale_int(ctx, -2, &Coord::add(ctx, zy, &root));
                Some(square_class(ctx, &val)?)
            } else {
                None
            };
            SymbolCache { sym_zy2_nu, class_neg_zy, class_m2_zy_root, uncertified }
        } else {
            SymbolCache::default()
        };

        Ok(OrbitInvariants {
            q: ctx.q(),
            ctx: *ctx,
            nu: self.nu,
            gamma_type: self.gamma_type(),
            m12,
            m13,
            m23,
            n12,
            n13,
            n23,
            v_x,
            v_y,
            x_is_zero,
            z_x,
            z_y,
            symbols,
        })
    }

    /// Representatives gamma_mu of the rational orbits inside the stable
    /// orbit, with off-diagonal entries (mu y, mu^{-1} nu y).
    pub fn rational_representatives(&self) -> Vec<SymmetricPoint> {
        let group = EndoscopicGroup::for_type(self.gamma_type());
        group
            .elements
            .iter()
            .map(|&mu| {
                let mut g = self.clone();
                g.mu = mu;
                g
            })
            .collect()
    }
}

/// Representative of a square class as an exact F-scalar.
pub fn class_rep_coord(ctx: &FieldContext, c: SquareClass) -> Coord {
    let unit = if c.twisted() { ctx.epsilon as i64 } else { 1 };
    Coord::from_int(ctx, unit).shift(c.v())
}

/// Serialized form of a symmetric point: context, torus and twist
/// parameters, and the three E-coordinates.
#[derive(serde::Serialize, serde::Deserialize, Clone, Debug)]
pub struct PointJson {
    pub p: u64,
    pub precision: u32,
    pub nu: Nu,
    #[serde(default = "default_mu")]
    pub mu: SquareClass,
    pub x: crate::scalar::ScalarJson,
    pub y: crate::scalar::ScalarJson,
    pub z: crate::scalar::ScalarJson,
}

fn default_mu() -> SquareClass {
    SquareClass::One
}

impl SymmetricPoint {
    pub fn to_json(&self) -> PointJson {
        let ctx = &self.ctx;
        let e = |v: &Ext| crate::scalar::scalar_to_json(ctx, &PadicScalar::E(v.clone()));
        PointJson {
            p: ctx.p,
            precision: ctx.precision,
            nu: self.nu,
            mu: self.mu,
            x: e(&self.x),
            y: e(&self.y),
            z: e(&self.z),
        }
    }

    pub fn from_json(j: &PointJson) -> Result<SymmetricPoint> {
        let ctx = FieldContext::new(j.p, j.precision)?;
        let e = |s: &crate::scalar::ScalarJson| -> Result<Ext> {
            crate::scalar::scalar_from_json(&ctx, s)?.as_ext(&ctx)
        };
        let mut g = SymmetricPoint::new(ctx, j.nu, e(&j.x)?, e(&j.y)?, e(&j.z)?);
        g.mu = j.mu;
        g.check_unitary()?;
        Ok(g)
    }
}

/// Cached quadratic-symbol data attached to a stable orbit.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymbolCache {
    /// (z_y^2 - nu / F)
    pub sym_zy2_nu: Option<i8>,
    /// square class of -z_y
    pub class_neg_zy: Option<SquareClass>,
    /// square class of -2(z_y + sqrt(z_y^2 - 1)) (type II, symbol +1 only)
    pub class_m2_zy_root: Option<SquareClass>,
    /// some entry is absent because its argument fell below certified depth
    pub uncertified: bool,
}

/// Stable-orbit data: the six valuations, the coordinates of z over the
/// basis {x, y}, and the symbol cache.
#[derive(Clone, Debug)]
pub struct OrbitInvariants {
    pub q: u64,
    pub ctx: FieldContext,
    pub nu: Nu,
    pub gamma_type: TorusType,
    pub m12: HalfInt,
    pub m13: HalfInt,
    pub m23: HalfInt,
    /// None encodes an infinite valuation (exact eigenvalue relation).
    pub n12: Option<HalfInt>,
    pub n13: Option<HalfInt>,
    pub n23: Option<HalfInt>,
    pub v_x: Option<HalfInt>,
    pub v_y: HalfInt,
    pub x_is_zero: bool,
    pub z_x: Option<Coord>,
    pub z_y: Option<Coord>,
    pub symbols: SymbolCache,
}

impl OrbitInvariants {
    pub fn all_nonnegative(&self) -> bool {
        [self.m12, self.m13, self.m23].iter().all(|v| !v.is_negative())
            && [self.n12, self.n13, self.n23]
                .iter()
                .all(|v| v.is_none_or(|h| !h.is_negative()))
    }

    pub fn m_min(&self) -> HalfInt {
        self.m12.min(self.m13).min(self.m23)
    }

    pub fn m_max(&self) -> HalfInt {
        self.m12.max(self.m13).max(self.m23)
    }

    fn symbol_gap(&self, what: &'static str) -> Error {
        if self.symbols.uncertified {
            Error::PrecisionExhausted(format!("symbol {what} below certified depth"))
        } else {
            Error::MissingSymbol(what)
        }
    }

    pub fn sym_zy2_nu(&self) -> Result<i8> {
        self.symbols.sym_zy2_nu.ok_or_else(|| self.symbol_gap("(z_y^2 - nu / F)"))
    }

    pub fn class_neg_zy(&self) -> Result<SquareClass> {
        self.symbols.class_neg_zy.ok_or_else(|| self.symbol_gap("[-z_y]"))
    }

    pub fn class_m2_zy_root(&self) -> Result<SquareClass> {
        self.symbols
            .class_m2_zy_root
            .ok_or(Error::MissingSymbol("[-2(z_y + sqrt(z_y^2-1))]"))
    }

    /// (-mu z_y / F)
    pub fn sym_neg_mu_zy(&self, mu: MuLabel) -> Result<i8> {
        Ok(self.class_neg_zy()?.mul(mu).symbol())
    }

    /// (-mu nu z_y / F)
    pub fn sym_neg_mu_nu_zy(&self, mu: MuLabel) -> Result<i8> {
        Ok(self.class_neg_zy()?.mul(mu).mul(self.nu).symbol())
    }

    /// (2 mu / F) or (-2 mu / F), by the sign argument.
    pub fn sym_pm2_mu(&self, sign: i64, mu: MuLabel) -> i8 {
        self.ctx.class_of_int(2 * sign).mul(mu).symbol()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> FieldContext {
        FieldContext::new(5, 64).unwrap()
    }

    #[test]
    fn classify() {
        assert_eq!(classify_torus(Nu::Xi2), TorusType::I);
        assert_eq!(classify_torus(Nu::One), TorusType::II);
        assert_eq!(classify_torus(Nu::Pi), TorusType::III);
        assert_eq!(classify_torus(Nu::Xi2Pi), TorusType::III);
    }

    #[test]
    fn delta_parity() {
        assert_eq!(delta(HalfInt::from_int(0), SquareClass::One), 1);
        assert_eq!(delta(HalfInt::from_int(3), SquareClass::Pi), 1);
        assert_eq!(delta(HalfInt::from_int(3), SquareClass::One), 0);
        assert_eq!(delta(HalfInt::from_int(5), SquareClass::Pi), 1); // delta_{N+2} = delta_N
    }

    #[test]
    fn kappa_character_table() {
        let g = EndoscopicGroup::for_type(TorusType::II);
        for k in g.nontrivial_characters() {
            assert_eq!(k.value(k.s), 1);
            assert_eq!(k.value(SquareClass::One), 1);
            for &a in &g.elements {
                for &b in &g.elements {
                    assert_eq!(k.value(g.op(a, b)), k.value(a) * k.value(b));
                }
            }
            assert!(g.elements.iter().any(|&e| k.value(e) == -1));
        }
        assert_eq!(
            KappaCharacter { s: SquareClass::Xi2, order2: false }.value(SquareClass::Pi),
            -1
        );
    }

    #[test]
    fn kappa_on_scalar_classes() {
        let ctx = ctx();
        let g = EndoscopicGroup::for_type(TorusType::III);
        let c = Coord::from_int(&ctx, 4);
        assert_eq!(g.class_of(&ctx, &c).unwrap(), SquareClass::One);
        for k in g.nontrivial_characters() {
            assert_eq!(k.value_on_scalar(&ctx, &c).unwrap(), 1);
        }
        // type I reduces by norm classes: units are trivial
        let gi = EndoscopicGroup::for_type(TorusType::I);
        let two = Coord::from_int(&ctx, 2);
        assert_eq!(gi.class_of(&ctx, &two).unwrap(), SquareClass::One);
        assert_eq!(gi.class_of(&ctx, &two.shift(1)).unwrap(), SquareClass::Pi);
    }
}
