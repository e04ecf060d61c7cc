//! Deterministic random-instance generators for the three benchmark families
//! and line-oriented instance file I/O.
//!
//! Reproducibility: all generators draw from a xoshiro256++ stream seeded via
//! splitmix64 from the 64-bit instance seed, so identical `(family, d, n,
//! seed)` yields bit-identical instances on every platform.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use thiserror::Error;

use crate::numkit::{dot, norm};

pub const FORMAT_VERSION: &str = "feas-v1";

#[derive(Debug, Error)]
pub enum ProblemsError {
    #[error("parse error at line {line}: {reason}")]
    ParseError { line: usize, reason: String },
    #[error("unsupported format version `{found}` (expected {FORMAT_VERSION})")]
    VersionMismatch { found: String },
    #[error("family requires n >= d+1 (got n={n}, d={d})")]
    DimensionTooSmall { d: usize, n: usize },
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Ex1,
    Ex2,
    Ex3,
    Custom,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::Ex1 => "ex1",
            Family::Ex2 => "ex2",
            Family::Ex3 => "ex3",
            Family::Custom => "custom",
        };
        f.write_str(s)
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ex1" => Ok(Family::Ex1),
            "ex2" => Ok(Family::Ex2),
            "ex3" => Ok(Family::Ex3),
            "custom" => Ok(Family::Custom),
            other => Err(format!("unknown family `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub family: Family,
    pub seed: u64,
    /// Accumulated translation applied to the originally generated system.
    pub translation: Vec<f64>,
}

/// A system of `n` linear inequalities `a_i^T x >= b_i` in dimension `d`,
/// with unit normals.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanInstance {
    dim: usize,
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    provenance: Provenance,
}

impl EuclideanInstance {
    pub fn new(
        dim: usize,
        normals: Vec<Vec<f64>>,
        offsets: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self, ProblemsError> {
        if normals.is_empty() {
            return Err(ProblemsError::Invalid("empty constraint list".into()));
        }
        if normals.len() != offsets.len() {
            return Err(ProblemsError::Invalid(format!(
                "{} normals vs {} offsets",
                normals.len(),
                offsets.len()
            )));
        }
        if provenance.translation.len() != dim {
            return Err(ProblemsError::Invalid("translation dimension mismatch".into()));
        }
        for (i, a) in normals.iter().enumerate() {
            if a.len() != dim {
                return Err(ProblemsError::Invalid(format!(
                    "constraint {i} has {} coordinates, expected {dim}",
                    a.len()
                )));
            }
            if a.iter().any(|x| !x.is_finite()) || !offsets[i].is_finite() {
                return Err(ProblemsError::Invalid(format!("constraint {i} not finite")));
            }
            if (norm(a) - 1.0).abs() > 1e-10 {
                return Err(ProblemsError::Invalid(format!(
                    "constraint {i} normal is not unit (norm {})",
                    norm(a)
                )));
            }
        }
        Ok(EuclideanInstance {
            dim,
            normals,
            offsets,
            provenance,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    pub fn normal(&self, i: usize) -> &[f64] {
        &self.normals[i]
    }

    pub fn offset(&self, i: usize) -> f64 {
        self.offsets[i]
    }

    pub fn normals(&self) -> &[Vec<f64>] {
        &self.normals
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// `max_i (b_i - a_i^T x)`; nonpositive iff `x` is feasible.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(a, b)| b - dot(a, x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_satisfied(&self, x: &[f64], tol: f64) -> bool {
        self.max_violation(x) <= tol
    }
}

fn random_unit(rng: &mut Xoshiro256PlusPlus, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// Random unit normals with strictly negative offsets, so the origin is
/// strictly feasible before translation.
pub fn gen_ex1(d: usize, n: usize, seed: u64) -> EuclideanInstance {
    assert!(d >= 1 && n >= 1, "need d >= 1 and n >= 1");
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut normals = Vec::with_capacity(n);
    let mut offsets = Vec::with_capacity(n);
    for _ in 0..n {
        normals.push(random_unit(&mut rng, d));
        offsets.push(rng.gen_range(-1.0..-1e-6));
    }
    let t: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let base = EuclideanInstance {
        dim: d,
        normals,
        offsets,
        provenance: Provenance {
            family: Family::Ex1,
            seed,
            translation: vec![0.0; d],
        },
    };
    translate(&base, &t)
}

fn gen_ex2_like(
    d: usize,
    n: usize,
    seed: u64,
    family: Family,
    b_last: f64,
) -> Result<EuclideanInstance, ProblemsError> {
    assert!(d >= 1, "need d >= 1");
    if n < d + 1 {
        return Err(ProblemsError::DimensionTooSmall { d, n });
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut normals = Vec::with_capacity(n);
    let mut offsets = Vec::with_capacity(n);
    for _ in 0..d {
        normals.push(random_unit(&mut rng, d));
        offsets.push(0.0);
    }
    let mut s = vec![0.0; d];
    for a in &normals {
        for (si, ai) in s.iter_mut().zip(a) {
            *si += ai;
        }
    }
    let sn = norm(&s);
    normals.push(s.iter().map(|x| -x / sn).collect());
    offsets.push(b_last);
    for _ in 0..n - d - 1 {
        normals.push(random_unit(&mut rng, d));
        offsets.push(rng.gen_range(-1.0..-1e-6));
    }
    let t: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let base = EuclideanInstance {
        dim: d,
        normals,
        offsets,
        provenance: Provenance {
            family,
            seed,
            translation: vec![0.0; d],
        },
    };
    Ok(translate(&base, &t))
}

/// First `d` constraints homogeneous with random normals, constraint `d+1`
/// the negated normalized sum; before translation the origin is (with
/// probability 1) the unique feasible point.
pub fn gen_ex2(d: usize, n: usize, seed: u64) -> Result<EuclideanInstance, ProblemsError> {
    gen_ex2_like(d, n, seed, Family::Ex2, 0.0)
}

/// Like `gen_ex2` but with offset 10 on constraint `d+1`, which makes the
/// system infeasible.
pub fn gen_ex3(d: usize, n: usize, seed: u64) -> Result<EuclideanInstance, ProblemsError> {
    gen_ex2_like(d, n, seed, Family::Ex3, 10.0)
}

/// Shifts the coordinate system by `t`: offsets become `b_i + a_i^T t`, so
/// `x` is feasible for the original iff `x + t` is feasible for the result.
pub fn translate(inst: &EuclideanInstance, t: &[f64]) -> EuclideanInstance {
    assert_eq!(t.len(), inst.dim);
    let offsets = inst
        .normals
        .iter()
        .zip(&inst.offsets)
        .map(|(a, b)| b + dot(a, t))
        .collect();
    let mut provenance = inst.provenance.clone();
    for (pi, ti) in provenance.translation.iter_mut().zip(t) {
        *pi += ti;
    }
    EuclideanInstance {
        dim: inst.dim,
        normals: inst.normals.clone(),
        offsets,
        provenance,
    }
}

pub fn format_instance(inst: &EuclideanInstance) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{FORMAT_VERSION} {} {} {} {}\n",
        inst.dim,
        inst.len(),
        inst.provenance.family,
        inst.provenance.seed
    ));
    for (a, b) in inst.normals.iter().zip(&inst.offsets) {
        for x in a {
            out.push_str(&format!("{x} "));
        }
        out.push_str(&format!("{b}\n"));
    }
    out.push_str("translation");
    for x in &inst.provenance.translation {
        out.push_str(&format!(" {x}"));
    }
    out.push('\n');
    out
}

pub fn parse_instance(text: &str) -> Result<EuclideanInstance, ProblemsError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| ProblemsError::ParseError {
        line: 1,
        reason: "empty file".into(),
    })?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.is_empty() || toks[0] != FORMAT_VERSION {
        return Err(ProblemsError::VersionMismatch {
            found: toks.first().unwrap_or(&"").to_string(),
        });
    }
    if toks.len() != 5 {
        return Err(ProblemsError::ParseError {
            line: 1,
            reason: format!("header needs 5 fields, got {}", toks.len()),
        });
    }
    let parse_err = |line: usize, reason: String| ProblemsError::ParseError { line, reason };
    let d: usize = toks[1]
        .parse()
        .map_err(|_| parse_err(1, format!("bad dimension `{}`", toks[1])))?;
    let n: usize = toks[2]
        .parse()
        .map_err(|_| parse_err(1, format!("bad constraint count `{}`", toks[2])))?;
    let family: Family = toks[3].parse().map_err(|e| parse_err(1, e))?;
    let seed: u64 = toks[4]
        .parse()
        .map_err(|_| parse_err(1, format!("bad seed `{}`", toks[4])))?;
    if d == 0 {
        return Err(parse_err(1, "dimension must be positive".into()));
    }
    if n == 0 {
        return Err(parse_err(1, "empty constraint list".into()));
    }

    let mut normals = Vec::with_capacity(n);
    let mut offsets = Vec::with_capacity(n);
    for _ in 0..n {
        let (idx, line) = lines.next().ok_or_else(|| ProblemsError::ParseError {
            line: n + 1,
            reason: "missing constraint line".into(),
        })?;
        let nums: Result<Vec<f64>, _> = line.split_whitespace().map(f64::from_str).collect();
        let nums = nums.map_err(|e| parse_err(idx + 1, format!("bad number: {e}")))?;
        if nums.len() != d + 1 {
            return Err(parse_err(
                idx + 1,
                format!("expected {} numbers, got {}", d + 1, nums.len()),
            ));
        }
        offsets.push(nums[d]);
        normals.push(nums[..d].to_vec());
    }
    let (idx, line) = lines.next().ok_or_else(|| ProblemsError::ParseError {
        line: n + 2,
        reason: "missing translation line".into(),
    })?;
    let mut toks = line.split_whitespace();
    if toks.next() != Some("translation") {
        return Err(parse_err(idx + 1, "expected `translation` line".into()));
    }
    let translation: Result<Vec<f64>, _> = toks.map(f64::from_str).collect();
    let translation = translation.map_err(|e| parse_err(idx + 1, format!("bad number: {e}")))?;
    if translation.len() != d {
        return Err(parse_err(
            idx + 1,
            format!(
                "expected {} translation coordinates, got {}",
                d,
                translation.len()
            ),
        ));
    }
    EuclideanInstance::new(
        d,
        normals,
        offsets,
        Provenance {
            family,
            seed,
            translation,
        },
    )
}

pub fn write_instance(
    inst: &EuclideanInstance,
    path: impl AsRef<Path>,
) -> Result<(), ProblemsError> {
    std::fs::write(path, format_instance(inst))?;
    Ok(())
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<EuclideanInstance, ProblemsError> {
    parse_instance(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ex1_translate_point_is_feasible() {
        for seed in 0..10 {
            let inst = gen_ex1(3, 24, seed);
            let t = &inst.provenance().translation;
            // a_i^T t - b_i = -b_i(pre-translation) > 0
            assert!(inst.max_violation(t) < 0.0);
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let a = gen_ex1(5, 20, 99);
        let b = gen_ex1(5, 20, 99);
        assert_eq!(a, b);
        let a = gen_ex2(4, 12, 7).unwrap();
        let b = gen_ex2(4, 12, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ex2_translate_point_is_feasible_and_tight() {
        let inst = gen_ex2(4, 16, 11).unwrap();
        let t = &inst.provenance().translation;
        assert!(inst.max_violation(t) <= 1e-12);
        // The first d+1 constraints are tight at the construction point.
        for i in 0..5 {
            assert!((dot(inst.normal(i), t) - inst.offset(i)).abs() <= 1e-12);
        }
    }

    #[test]
    fn ex2_first_normals_sum_to_zero() {
        let inst = gen_ex2(6, 10, 4).unwrap();
        let mut s = vec![0.0; 6];
        for i in 0..6 {
            for (si, ai) in s.iter_mut().zip(inst.normal(i)) {
                *si += ai;
            }
        }
        let sn = norm(&s);
        let mut resid = vec![0.0; 6];
        for j in 0..6 {
            resid[j] = s[j] + sn * inst.normal(6)[j];
        }
        assert!(norm(&resid) <= 1e-12);
    }

    #[test]
    fn ex3_differs_from_ex2_only_in_one_offset() {
        let a = gen_ex2(3, 10, 42).unwrap();
        let b = gen_ex3(3, 10, 42).unwrap();
        assert_eq!(a.normals(), b.normals());
        for i in 0..10 {
            if i == 3 {
                assert!((b.offset(i) - a.offset(i) - 10.0).abs() <= 1e-12);
            } else {
                assert_eq!(a.offset(i), b.offset(i));
            }
        }
    }

    #[test]
    fn ex2_requires_enough_constraints() {
        assert!(matches!(
            gen_ex2(5, 3, 1),
            Err(ProblemsError::DimensionTooSmall { .. })
        ));
    }

    #[test]
    fn translate_zero_is_identity() {
        let inst = gen_ex1(3, 8, 5);
        let same = translate(&inst, &[0.0, 0.0, 0.0]);
        assert_eq!(inst, same);
    }

    #[test]
    fn translate_round_trip() {
        let inst = gen_ex1(3, 8, 5);
        let t = [0.25, -1.5, 0.75];
        let back = translate(&translate(&inst, &t), &[-0.25, 1.5, -0.75]);
        for i in 0..inst.len() {
            assert!((inst.offset(i) - back.offset(i)).abs() <= 1e-12);
        }
    }

    #[test]
    fn translate_preserves_feasibility_pointwise() {
        let inst = gen_ex1(4, 12, 8);
        let t = [1.0, -0.5, 0.25, 2.0];
        let shifted = translate(&inst, &t);
        let x = [0.3, 0.1, -0.2, 0.9];
        let xt: Vec<f64> = x.iter().zip(&t).map(|(a, b)| a + b).collect();
        assert!((inst.max_violation(&x) - shifted.max_violation(&xt)).abs() <= 1e-12);
    }

    #[test]
    fn file_round_trip_is_bit_identical() {
        for seed in 0..20 {
            let inst = gen_ex1(4, 10, seed);
            let text = format_instance(&inst);
            let back = parse_instance(&text).unwrap();
            assert_eq!(inst, back);
        }
        let inst = gen_ex3(3, 7, 3).unwrap();
        let back = parse_instance(&format_instance(&inst)).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn parse_rejects_malformed_input() {
        assert!(matches!(
            parse_instance("feas-v2 1 1 ex1 0\n1 0\ntranslation 0\n"),
            Err(ProblemsError::VersionMismatch { .. })
        ));
        assert!(matches!(
            parse_instance("feas-v1 x 1 ex1 0\n1 0\ntranslation 0\n"),
            Err(ProblemsError::ParseError { line: 1, .. })
        ));
        assert!(matches!(
            parse_instance("feas-v1 1 0 ex1 0\ntranslation 0\n"),
            Err(ProblemsError::ParseError { .. })
        ));
        assert!(matches!(
            parse_instance("feas-v1 2 1 ex1 0\n1 0 0\ntranslation 0"),
            Err(ProblemsError::ParseError { .. })
        ));
        assert!(matches!(
            parse_instance("feas-v1 1 1 ex1 0\n1 0\n"),
            Err(ProblemsError::ParseError { .. })
        ));
    }
}
