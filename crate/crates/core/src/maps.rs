//! Direction-to-position maps `c` with controlled regularity.
//!
//! A ball-domain map sends `B^{n-1}` to `R^{n-1}`; a sphere-domain map sends
//! `S^{n-1}` to `R^n`. Every variant is a pure function of its parameters, so
//! two maps built from the same spec evaluate identically to the last bit.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{KakeyaError, Result};
use crate::geom::dist;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Ball,
    Sphere,
}

#[derive(Clone, Debug)]
pub enum Variant {
    Constant {
        p: Vec<f64>,
    },
    RadialScale {
        r: f64,
    },
    Polynomial {
        monomials: Vec<Vec<u32>>,
        coefficients: Vec<Vec<f64>>,
    },
    /// Octave-spaced series `Σ_k amp·2^{-αk} cos(2^k·θ + φ_k)·u_k`.
    ///
    /// For `n = 3` on the ball the term is the harmonic extension
    /// `Re(e^{iφ_k} z^{2^k})`, which equals the cosine on the unit circle.
    /// Otherwise `θ` is replaced by a ridge `⟨ω_k, x⟩`.
    Lacunary {
        alpha: f64,
        amplitudes: Vec<f64>,
        phases: Vec<f64>,
        directions: Vec<Vec<f64>>,
        ridges: Vec<Vec<f64>>,
        harmonic: bool,
    },
    /// McShane extension of net samples.
    GridSampled {
        points: Vec<Vec<f64>>,
        values: Vec<Vec<f64>>,
        lipschitz: f64,
    },
}

/// Certified upper bound `ω(s)` on `|c(x) - c(y)|` for `|x - y| ≤ s`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Modulus {
    Lipschitz(f64),
    Holder { constant: f64, exponent: f64 },
    Series { amplitudes: Vec<f64>, frequencies: Vec<f64> },
}

impl Modulus {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Modulus::Lipschitz(l) => l * s,
            Modulus::Holder { constant, exponent } => constant * s.powf(*exponent),
            Modulus::Series {
                amplitudes,
                frequencies,
            } => amplitudes
                .iter()
                .zip(frequencies)
                .map(|(a, f)| a * (f * s).min(2.0))
                .sum(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Modulus::Lipschitz(l) => l.is_finite() && *l >= 0.0,
            Modulus::Holder { constant, exponent } => {
                constant.is_finite() && *constant >= 0.0 && *exponent > 0.0 && *exponent <= 1.0
            }
            Modulus::Series {
                amplitudes,
                frequencies,
            } => amplitudes.len() == frequencies.len()
                && amplitudes.iter().chain(frequencies).all(|x| x.is_finite() && *x >= 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(KakeyaError::ModulusUnavailable(format!("{self:?}")))
        }
    }

    fn scaled(self, k: f64) -> Modulus {
        let k = k.abs();
        match self {
            Modulus::Lipschitz(l) => Modulus::Lipschitz(l * k),
            Modulus::Holder { constant, exponent } => Modulus::Holder {
                constant: constant * k,
                exponent,
            },
            Modulus::Series {
                amplitudes,
                frequencies,
            } => Modulus::Series {
                amplitudes: amplitudes.into_iter().map(|a| a * k).collect(),
                frequencies,
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct PositionMap {
    n: usize,
    domain: Domain,
    variant: Variant,
    scale: f64,
    label: String,
}

impl PositionMap {
    fn new(n: usize, domain: Domain, variant: Variant, label: String) -> Result<Self> {
        if !(3..=4).contains(&n) {
            return Err(KakeyaError::Dimension {
                dim: n,
                context: "ambient dimension must be 3 or 4",
            });
        }
        Ok(PositionMap {
            n,
            domain,
            variant,
            scale: 1.0,
            label,
        })
    }

    pub fn constant(n: usize, domain: Domain, p: Vec<f64>) -> Result<Self> {
        let m = out_dim(n, domain);
        if p.len() != m {
            return Err(KakeyaError::LengthMismatch {
                expected: m,
                actual: p.len(),
            });
        }
        let label = if p.iter().all(|&x| x == 0.0) {
            "zero".to_string()
        } else {
            let kv: Vec<String> = p
                .iter()
                .enumerate()
                .map(|(i, x)| format!("p{}={}", i + 1, x))
                .collect();
            format!("const:{}", kv.join(","))
        };
        Self::new(n, domain, Variant::Constant { p }, label)
    }

    pub fn zero(n: usize, domain: Domain) -> Result<Self> {
        Self::constant(n, domain, vec![0.0; out_dim(n, domain)])
    }

    pub fn radial(n: usize, domain: Domain, r: f64) -> Result<Self> {
        if !r.is_finite() {
            return Err(KakeyaError::param("r", "must be finite"));
        }
        Self::new(n, domain, Variant::RadialScale { r }, format!("radial:r={r}"))
    }

    /// Random polynomial of total degree ≤ `degree` with `Σ‖a_m‖ = sup`, so
    /// `|c| ≤ sup` on the unit ball.
    pub fn polynomial(n: usize, domain: Domain, degree: u32, seed: u64, sup: f64) -> Result<Self> {
        if degree > 12 {
            return Err(KakeyaError::param("degree", "must be at most 12"));
        }
        if !(sup.is_finite() && sup >= 0.0) {
            return Err(KakeyaError::param("sup", "must be finite and nonnegative"));
        }
        let (m_in, m_out) = (in_dim(n, domain), out_dim(n, domain));
        let monomials = monomials(m_in, degree);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coefficients: Vec<Vec<f64>> = monomials
            .iter()
            .map(|_| (0..m_out).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let total: f64 = coefficients
            .iter()
            .map(|a| a.iter().map(|x| x * x).sum::<f64>().sqrt())
            .sum();
        let k = if total > 0.0 { sup / total } else { 0.0 };
        for a in &mut coefficients {
            for x in a.iter_mut() {
                *x *= k;
            }
        }
        Self::new(
            n,
            domain,
            Variant::Polynomial {
                monomials,
                coefficients,
            },
            format!("poly:degree={degree},seed={seed},sup={sup}"),
        )
    }

    pub fn lacunary(n: usize, domain: Domain, alpha: f64, terms: u32, seed: u64) -> Result<Self> {
        Self::lacunary_with_amp(n, domain, alpha, terms, seed, 1.0)
    }

    pub fn lacunary_with_amp(
        n: usize,
        domain: Domain,
        alpha: f64,
        terms: u32,
        seed: u64,
        amp: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(KakeyaError::param("alpha", format!("{alpha} is outside (0, 1]")));
        }
        if terms == 0 || terms > 24 {
            return Err(KakeyaError::param("terms", "must be in 1..=24"));
        }
        if !amp.is_finite() {
            return Err(KakeyaError::param("amp", "must be finite"));
        }
        let (m_in, m_out) = (in_dim(n, domain), out_dim(n, domain));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut amplitudes = Vec::new();
        let mut phases = Vec::new();
        let mut directions = Vec::new();
        let mut ridges = Vec::new();
        for k in 1..=terms {
            amplitudes.push(amp * 2f64.powf(-alpha * k as f64));
            phases.push(rng.gen_range(0.0..2.0 * PI));
            directions.push(random_unit(&mut rng, m_out));
            ridges.push(random_unit(&mut rng, m_in));
        }
        let mut label = format!("lacunary:alpha={alpha},terms={terms},seed={seed}");
        if amp != 1.0 {
            label.push_str(&format!(",amp={amp}"));
        }
        Self::new(
            n,
            domain,
            Variant::Lacunary {
                alpha,
                amplitudes,
                phases,
                directions,
                ridges,
                harmonic: m_in == 2 && domain == Domain::Ball,
            },
            label,
        )
    }

    /// Parses `variant:key=val,...` (see README for the catalog).
    pub fn parse(spec: &str, n: usize, domain: Domain) -> Result<Self> {
        let (variant, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let mut kv: Vec<(&str, &str)> = Vec::new();
        for item in rest.split(',').filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| KakeyaError::Parse(format!("expected key=value, got `{item}`")))?;
            kv.push((k.trim(), v.trim()));
        }
        let get = |key: &str| kv.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        let num = |key: &'static str, default: Option<f64>| -> Result<f64> {
            match get(key) {
                Some(v) => v
                    .parse::<f64>()
                    .map_err(|_| KakeyaError::Parse(format!("`{key}` is not a number: {v}"))),
                None => default.ok_or_else(|| KakeyaError::Parse(format!("missing `{key}`"))),
            }
        };
        let int = |key: &'static str, default: Option<u64>| -> Result<u64> {
            match get(key) {
                Some(v) => v
                    .parse::<u64>()
                    .map_err(|_| KakeyaError::Parse(format!("`{key}` is not an integer: {v}"))),
                None => default.ok_or_else(|| KakeyaError::Parse(format!("missing `{key}`"))),
            }
        };
        let allow = |keys: &[&str]| -> Result<()> {
            for (k, _) in &kv {
                if !keys.contains(k) {
                    return Err(KakeyaError::Parse(format!("unknown key `{k}` for `{variant}`")));
                }
            }
            Ok(())
        };
        match variant {
            "zero" => {
                allow(&[])?;
                Self::zero(n, domain)
            }
            "const" => {
                let m = out_dim(n, domain);
                let keys: Vec<String> = (1..=m).map(|i| format!("p{i}")).collect();
                let key_refs: Vec<&str> = keys.iter().map(String::as_str).collect();
                allow(&key_refs)?;
                let mut p = vec![0.0; m];
                for (i, key) in keys.iter().enumerate() {
                    if let Some(v) = get(key) {
                        p[i] = v
                            .parse()
                            .map_err(|_| KakeyaError::Parse(format!("`{key}` is not a number: {v}")))?;
                    }
                }
                Self::constant(n, domain, p)
            }
            "radial" => {
                allow(&["r"])?;
                Self::radial(n, domain, num("r", None)?)
            }
            "poly" => {
                allow(&["degree", "seed", "sup"])?;
                Self::polynomial(
                    n,
                    domain,
                    int("degree", Some(3))? as u32,
                    int("seed", Some(0))?,
                    num("sup", Some(0.5))?,
                )
            }
            "lacunary" => {
                allow(&["alpha", "terms", "seed", "amp"])?;
                Self::lacunary_with_amp(
                    n,
                    domain,
                    num("alpha", None)?,
                    int("terms", Some(12))? as u32,
                    int("seed", Some(0))?,
                    num("amp", Some(1.0))?,
                )
            }
            "grid" => {
                allow(&["file"])?;
                let file = get("file").ok_or_else(|| KakeyaError::Parse("missing `file`".into()))?;
                let samples = load_samples(Path::new(file), in_dim(n, domain))?;
                let mut map = crate::regularity::mcshane_extend(&samples)?;
                if map.n != n {
                    return Err(KakeyaError::Dimension {
                        dim: map.n,
                        context: "sample file width does not match --n",
                    });
                }
                map.label = spec.to_string();
                Ok(map)
            }
            other => Err(KakeyaError::Parse(format!("unknown map variant `{other}`"))),
        }
    }

    pub(crate) fn grid_sampled(
        points: Vec<Vec<f64>>,
        values: Vec<Vec<f64>>,
        lipschitz: f64,
    ) -> Result<Self> {
        let n = points[0].len() + 1;
        Self::new(
            n,
            Domain::Ball,
            Variant::GridSampled {
                points,
                values,
                lipschitz,
            },
            "grid".to_string(),
        )
    }

    /// The same map multiplied by `k`.
    pub fn scaled(&self, k: f64) -> PositionMap {
        let mut out = self.clone();
        out.scale *= k;
        out.label = format!("{}*{}", self.label, k);
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn in_dim(&self) -> usize {
        in_dim(self.n, self.domain)
    }

    pub fn out_dim(&self) -> usize {
        out_dim(self.n, self.domain)
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.variant, Variant::Constant { .. }) || self.scale == 0.0
    }

    /// Evaluates `c(x)` into `out` (length [`Self::out_dim`]).
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.in_dim());
        match &self.variant {
            Variant::Constant { p } => out.copy_from_slice(p),
            Variant::RadialScale { r } => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = r * xi;
                }
            }
            Variant::Polynomial {
                monomials,
                coefficients,
            } => {
                out.fill(0.0);
                for (m, a) in monomials.iter().zip(coefficients) {
                    let mono: f64 = m.iter().zip(x).map(|(&e, xi)| xi.powi(e as i32)).product();
                    for (o, ai) in out.iter_mut().zip(a) {
                        *o += ai * mono;
                    }
                }
            }
            Variant::Lacunary {
                amplitudes,
                phases,
                directions,
                ridges,
                harmonic,
                ..
            } => {
                out.fill(0.0);
                if *harmonic {
                    // z^{2^k} by repeated squaring.
                    let (mut re, mut im) = (x[0], x[1]);
                    for k in 0..amplitudes.len() {
                        let r2 = re * re - im * im;
                        im *= 2.0 * re;
                        re = r2;
                        let (s, c) = phases[k].sin_cos();
                        let val = amplitudes[k] * (re * c - im * s);
                        for (o, u) in out.iter_mut().zip(&directions[k]) {
                            *o += val * u;
                        }
                    }
                } else {
                    let mut freq = 1.0;
                    for k in 0..amplitudes.len() {
                        freq *= 2.0;
                        let proj: f64 = ridges[k].iter().zip(x).map(|(w, xi)| w * xi).sum();
                        let val = amplitudes[k] * (freq * proj + phases[k]).cos();
                        for (o, u) in out.iter_mut().zip(&directions[k]) {
                            *o += val * u;
                        }
                    }
                }
            }
            Variant::GridSampled {
                points,
                values,
                lipschitz,
            } => {
                out.fill(f64::INFINITY);
                for (s, cs) in points.iter().zip(values) {
                    let d = lipschitz * dist(x, s);
                    for (o, ci) in out.iter_mut().zip(cs) {
                        *o = o.min(ci + d);
                    }
                }
            }
        }
        if self.scale != 1.0 {
            for o in out.iter_mut() {
                *o *= self.scale;
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.out_dim()];
        self.eval_into(x, &mut out);
        out
    }

    /// Analytic modulus of continuity on the unit ball (or sphere).
    pub fn modulus(&self) -> Result<Modulus> {
        let m = match &self.variant {
            Variant::Constant { .. } => Modulus::Lipschitz(0.0),
            Variant::RadialScale { r } => Modulus::Lipschitz(r.abs()),
            Variant::Polynomial {
                monomials,
                coefficients,
            } => Modulus::Lipschitz(
                monomials
                    .iter()
                    .zip(coefficients)
                    .map(|(m, a)| {
                        let deg: u32 = m.iter().sum();
                        deg as f64 * a.iter().map(|x| x * x).sum::<f64>().sqrt()
                    })
                    .sum(),
            ),
            Variant::Lacunary { amplitudes, .. } => Modulus::Series {
                amplitudes: amplitudes.iter().map(|a| a.abs()).collect(),
                frequencies: (1..=amplitudes.len()).map(|k| 2f64.powi(k as i32)).collect(),
            },
            Variant::GridSampled { lipschitz, values, .. } => {
                Modulus::Lipschitz((values[0].len() as f64).sqrt() * lipschitz)
            }
        };
        let m = m.scaled(self.scale);
        m.validate()?;
        Ok(m)
    }

    /// Upper bound for `sup |c|` over the domain, where one is known in closed form.
    pub fn sup_bound(&self) -> Option<f64> {
        let b = match &self.variant {
            Variant::Constant { p } => p.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Variant::RadialScale { r } => r.abs(),
            Variant::Polynomial { coefficients, .. } => coefficients
                .iter()
                .map(|a| a.iter().map(|x| x * x).sum::<f64>().sqrt())
                .sum(),
            Variant::Lacunary { amplitudes, .. } => amplitudes.iter().map(|a| a.abs()).sum(),
            Variant::GridSampled { .. } => return None,
        };
        Some(b * self.scale.abs())
    }
}

pub(crate) fn in_dim(n: usize, domain: Domain) -> usize {
    match domain {
        Domain::Ball => n - 1,
        Domain::Sphere => n,
    }
}

pub(crate) fn out_dim(n: usize, domain: Domain) -> usize {
    in_dim(n, domain)
}

fn monomials(vars: usize, degree: u32) -> Vec<Vec<u32>> {
    fn rec(vars: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == vars {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur.push(e);
            rec(vars, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(vars, degree, &mut Vec::new(), &mut out);
    out
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 0.1 && r <= 1.0 {
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}

/// Reads `v1,...,v_m,c1,...,c_m` rows (blank lines and `#` comments skipped).
pub fn load_samples(path: &Path, m: usize) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| KakeyaError::Parse(format!("{}: {e}", path.display())))?;
    parse_samples(&text, m)
}

pub fn parse_samples(text: &str, m: usize) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let Ok(fields) = fields else {
            // Tolerate a header row.
            if out.is_empty() && lineno == 0 {
                continue;
            }
            return Err(KakeyaError::Parse(format!("line {}: not numeric", lineno + 1)));
        };
        if fields.len() != 2 * m {
            return Err(KakeyaError::Parse(format!(
                "line {}: expected {} fields, found {}",
                lineno + 1,
                2 * m,
                fields.len()
            )));
        }
        out.push((fields[..m].to_vec(), fields[m..].to_vec()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_and_radial() {
        let c = PositionMap::parse("const:p1=0.1,p2=0.2", 3, Domain::Ball).unwrap();
        assert_eq!(c.eval(&[0.3, -0.4]), vec![0.1, 0.2]);
        let r = PositionMap::parse("radial:r=0.5", 3, Domain::Ball).unwrap();
        assert_eq!(r.eval(&[0.6, -0.2]), vec![0.3, -0.1]);
        assert_eq!(PositionMap::parse("zero", 3, Domain::Ball).unwrap().label(), "zero");
    }

    #[test]
    fn lacunary_sup_below_geometric_bound() {
        let c = PositionMap::parse("lacunary:alpha=0.8,terms=12,seed=7", 3, Domain::Ball).unwrap();
        let bound: f64 = (1..=12).map(|k| 2f64.powf(-0.8 * k as f64)).sum();
        assert!(bound < 1.35);
        let mut sup: f64 = 0.0;
        for i in 0..20_000 {
            let th = 2.0 * PI * i as f64 / 20_000.0;
            for rho in [1.0, 0.7, 0.3] {
                let v = c.eval(&[rho * th.cos(), rho * th.sin()]);
                sup = sup.max((v[0] * v[0] + v[1] * v[1]).sqrt());
            }
        }
        assert!(sup <= bound + 1e-12, "{sup} > {bound}");
        assert!(sup > 0.3);
    }

    #[test]
    fn lacunary_matches_series_on_circle() {
        let c = PositionMap::lacunary(3, Domain::Ball, 0.6, 10, 3).unwrap();
        let Variant::Lacunary {
            amplitudes,
            phases,
            directions,
            ..
        } = c.variant().clone()
        else {
            unreachable!()
        };
        for i in 0..50 {
            let th = 0.123 * i as f64;
            let mut expect = [0.0; 2];
            for k in 0..10 {
                let val = amplitudes[k] * (2f64.powi(k as i32 + 1) * th + phases[k]).cos();
                expect[0] += val * directions[k][0];
                expect[1] += val * directions[k][1];
            }
            let got = c.eval(&[th.cos(), th.sin()]);
            assert!((got[0] - expect[0]).abs() < 1e-10 && (got[1] - expect[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(PositionMap::parse("lacunary:alpha=1.5,terms=4,seed=1", 3, Domain::Ball).is_err());
        assert!(PositionMap::parse("lacunary:alpha=0,terms=4", 3, Domain::Ball).is_err());
        assert!(PositionMap::parse("radial:q=1", 3, Domain::Ball).is_err());
        assert!(PositionMap::parse("spiral", 3, Domain::Ball).is_err());
        assert!(PositionMap::parse("zero", 5, Domain::Ball).is_err());
    }

    #[test]
    fn polynomial_sup_and_modulus() {
        let c = PositionMap::polynomial(3, Domain::Sphere, 3, 11, 0.5).unwrap();
        assert!((c.sup_bound().unwrap() - 0.5).abs() < 1e-12);
        let Modulus::Lipschitz(l) = c.modulus().unwrap() else {
            panic!()
        };
        for p in crate::sphere::fibonacci_sphere(400).windows(2) {
            let (a, b) = (c.eval(&p[0]), c.eval(&p[1]));
            assert!(dist(&a, &b) <= l * dist(&p[0], &p[1]) + 1e-12);
            assert!(a.iter().map(|x| x * x).sum::<f64>().sqrt() <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn scaling_is_linear() {
        let c = PositionMap::lacunary(3, Domain::Ball, 0.7, 8, 2).unwrap();
        let s = c.scaled(3.0);
        let x = [0.2, -0.5];
        let (a, b) = (c.eval(&x), s.eval(&x));
        assert!((3.0 * a[0] - b[0]).abs() < 1e-14);
    }

    #[test]
    fn sample_parsing() {
        let rows = parse_samples("v1,v2,c1,c2\n0,0,1,2\n0.5,0,1,2.5\n", 2).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].1, vec![1.0, 2.5]);
        assert!(parse_samples("0,0,1\n", 2).is_err());
    }

    proptest! {
        #[test]
        fn evaluation_is_deterministic(seed in 0u64..1000, x in -0.7f64..0.7, y in -0.7f64..0.7) {
            let a = PositionMap::lacunary(3, Domain::Ball, 0.5, 14, seed).unwrap();
            let b = PositionMap::lacunary(3, Domain::Ball, 0.5, 14, seed).unwrap();
            prop_assert_eq!(a.eval(&[x, y]), b.eval(&[x, y]));
            let p = PositionMap::polynomial(4, Domain::Ball, 4, seed, 0.5).unwrap();
            let q = PositionMap::polynomial(4, Domain::Ball, 4, seed, 0.5).unwrap();
            prop_assert_eq!(p.eval(&[x, y, 0.1]), q.eval(&[x, y, 0.1]));
        }

        #[test]
        fn modulus_bounds_lacunary_increments(seed in 0u64..50, th in 0.0f64..std::f64::consts::TAU, ds in 1e-4f64..0.3) {
            let c = PositionMap::lacunary(3, Domain::Ball, 0.6, 12, seed).unwrap();
            let m = c.modulus().unwrap();
            let x = [th.cos() * 0.6, th.sin() * 0.6];
            let y = [x[0] + ds, x[1]];
            prop_assert!(dist(&c.eval(&x), &c.eval(&y)) <= m.eval(ds) + 1e-12);
        }
    }
}
