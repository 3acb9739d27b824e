//! Truncated expansion series and their algebra.
//!
//! Four kinds of partial sum share one engine (the first three are sections
//! of the fourth):
//!
//! - expansion kind: `Σ_{q<=x} G(q) c_q(a)`;
//! - coprime Möbius kind: `Σ_{r<=x, (r,b)=1} G(r) μ(r)`;
//! - dilated Möbius kind: `Σ_{K<=x} μ(K) G(dK)`;
//! - constrained kind: `Σ_{q<=x, (q,b)=1} G(cq) c_q(a)`.
//!
//! All truncations treat `x` as a real cut: the sum is over integers up to
//! `⌊x⌋` and is empty (zero) for `0 <= x < 1`. When the coefficient has the
//! zero default rule the full series has finitely many nonzero terms — the
//! listed primes bound the support horizontally and the vanishing of
//! `c_{p^K}(a)` for `K > v_p(a)+1` bounds it vertically — and
//! [`exact_sum`] evaluates the complete series in closed finite form.
//! Partial-sum identities relating the kinds are checked by
//! [`identity_residual`]; limits of genuinely infinite series are estimated
//! heuristically from traces by [`estimate_limit`].

use num_complex::Complex64;

use crate::coeff::{CoefficientSpec, DefaultRule};
use crate::error::{Error, Result};
use crate::ramsum::{ramanujan_sum, ramanujan_sum_prime_power};
use crate::scalar::{residual, Scalar};
use crate::sieve::{gcd, Sieve};

/// Hard cap on the number of terms a single scan may touch.
pub const SCAN_BUDGET: u64 = 50_000_000;

/// Which truncated series to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    /// `Σ_{q<=x} G(q) c_q(a)` — the expansion partial sum at `a`.
    Expansion { a: u64 },
    /// `Σ_{r<=x, (r,b)=1} G(r) μ(r)` — square-free trace away from `b`.
    CoprimeMobius { b: u64 },
    /// `Σ_{K<=x} μ(K) G(dK)` — Möbius sum along the dilation by `d`.
    DilatedMobius { d: u64 },
    /// `Σ_{q<=x, (q,b)=1} G(cq) c_q(a)` — the common generalisation.
    Constrained { a: u64, b: u64, c: u64 },
}

impl SeriesKind {
    /// View as the constrained kind `(a, b, c)`.
    pub fn as_constrained(&self) -> (u64, u64, u64) {
        match *self {
            SeriesKind::Expansion { a } => (a, 1, 1),
            SeriesKind::CoprimeMobius { b } => (1, b, 1),
            SeriesKind::DilatedMobius { d } => (1, 1, d),
            SeriesKind::Constrained { a, b, c } => (a, b, c),
        }
    }

    fn validate(&self) -> Result<()> {
        let (a, b, c) = self.as_constrained();
        if a == 0 || b == 0 || c == 0 {
            return Err(Error::ZeroArgument);
        }
        Ok(())
    }
}

/// `G(c·q)` without factorizing the product `c·q`, by merging the two
/// factorizations; avoids sieve-bound pressure when `c` is large.
fn value_at_shifted<S: Scalar>(
    g: &CoefficientSpec<S>,
    sieve: &Sieve,
    c_factors: &[(u64, u32)],
    q: u64,
) -> Result<S> {
    let fq = sieve.factorize(q)?;
    let mut out = S::one();
    let mut qi = 0;
    for &(p, e) in c_factors {
        let mut total = e;
        // Merge exponents for primes shared with q (both lists increasing).
        while qi < fq.factors.len() && fq.factors[qi].0 < p {
            let (pq, eq) = fq.factors[qi];
            let v = g.prime_power(pq, eq)?;
            if v.is_zero() {
                return Ok(S::zero());
            }
            out = out * v;
            qi += 1;
        }
        if qi < fq.factors.len() && fq.factors[qi].0 == p {
            total += fq.factors[qi].1;
            qi += 1;
        }
        let v = g.prime_power(p, total)?;
        if v.is_zero() {
            return Ok(S::zero());
        }
        out = out * v;
    }
    while qi < fq.factors.len() {
        let (pq, eq) = fq.factors[qi];
        let v = g.prime_power(pq, eq)?;
        if v.is_zero() {
            return Ok(S::zero());
        }
        out = out * v;
        qi += 1;
    }
    Ok(out)
}

/// One term of the constrained series at index `q` (zero when `(q,b) != 1`).
fn term<S: Scalar>(
    g: &CoefficientSpec<S>,
    sieve: &Sieve,
    a: u64,
    b: u64,
    c_factors: &[(u64, u32)],
    q: u64,
) -> Result<S> {
    if b > 1 && gcd(q, b) != 1 {
        return Ok(S::zero());
    }
    let cq = ramanujan_sum(sieve, q, a)?;
    if cq == 0 {
        return Ok(S::zero());
    }
    let gv = value_at_shifted(g, sieve, c_factors, q)?;
    Ok(gv * S::from_i64(cq))
}

/// Partial sums at each checkpoint of an increasing schedule, in one pass.
pub fn scan<S: Scalar>(
    sieve: &Sieve,
    g: &CoefficientSpec<S>,
    kind: SeriesKind,
    xs: &[f64],
) -> Result<Vec<(f64, S)>> {
    kind.validate()?;
    let (a, b, c) = kind.as_constrained();
    let c_factors = sieve.factorize(c)?.factors;
    let x_max = xs.iter().cloned().fold(0.0f64, f64::max);
    let q_max = if x_max < 1.0 { 0 } else { x_max.floor() as u64 };
    if q_max > SCAN_BUDGET {
        return Err(Error::ScanBudget {
            terms: q_max,
            budget: SCAN_BUDGET,
        });
    }
    if q_max > sieve.bound() {
        return Err(Error::SieveBound {
            n: q_max,
            bound: sieve.bound(),
        });
    }
    let mut cuts: Vec<(usize, u64)> = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| (i, if x < 1.0 { 0 } else { x.floor() as u64 }))
        .collect();
    cuts.sort_by_key(|&(_, q)| q);
    let mut out: Vec<(f64, S)> = xs.iter().map(|&x| (x, S::zero())).collect();
    let mut sum = S::zero();
    let mut ci = 0;
    while ci < cuts.len() && cuts[ci].1 == 0 {
        ci += 1; // empty sums below 1 stay zero
    }
    for q in 1..=q_max {
        sum = sum + term(g, sieve, a, b, &c_factors, q)?;
        while ci < cuts.len() && cuts[ci].1 == q {
            out[cuts[ci].0].1 = sum.clone();
            ci += 1;
        }
    }
    Ok(out)
}

/// The truncated series value at a single real cut `x`.
pub fn partial_sum<S: Scalar>(
    sieve: &Sieve,
    g: &CoefficientSpec<S>,
    kind: SeriesKind,
    x: f64,
) -> Result<S> {
    Ok(scan(sieve, g, kind, &[x])?.pop().expect("one checkpoint").1)
}

/// Prefix table of partial sums on the integer grid `0..=x_max`
/// (`prefix[i]` is the sum truncated at `i`).
fn prefix<S: Scalar>(
    sieve: &Sieve,
    g: &CoefficientSpec<S>,
    kind: SeriesKind,
    x_max: u64,
) -> Result<Vec<S>> {
    kind.validate()?;
    let (a, b, c) = kind.as_constrained();
    let c_factors = sieve.factorize(c)?.factors;
    let mut out = Vec::with_capacity(x_max as usize + 1);
    out.push(S::zero());
    let mut sum = S::zero();
    for q in 1..=x_max {
        sum = sum + term(g, sieve, a, b, &c_factors, q)?;
        out.push(sum.clone());
    }
    Ok(out)
}

/// The complete (infinite) series in finite closed form.
///
/// Requires the zero default rule: every term then vanishes unless the index
/// is supported on the listed primes, and `c_{p^K}(a) = 0` for
/// `K > v_p(a) + 1` caps the exponents, so the series is a finite sum which
/// is enumerated exactly. Any other default rule yields
/// [`Error::FinitenessNotProvable`].
pub fn exact_sum<S: Scalar>(
    sieve: &Sieve,
    g: &CoefficientSpec<S>,
    kind: SeriesKind,
) -> Result<S> {
    kind.validate()?;
    if !matches!(g.default_rule(), DefaultRule::ZeroOnPrimes) {
        return Err(Error::FinitenessNotProvable);
    }
    let (a, b, c) = kind.as_constrained();
    // Primes that can appear in a nonzero term: listed primes (for the G
    // factor) plus primes of c (which shift the G argument).
    let mut primes: Vec<u64> = g.listed_primes().collect();
    let mut c_rest = c;
    let mut d = 2;
    while d * d <= c_rest {
        if c_rest % d == 0 {
            if !primes.contains(&d) {
                primes.push(d);
            }
            while c_rest % d == 0 {
                c_rest /= d;
            }
        }
        d += 1;
    }
    if c_rest > 1 && !primes.contains(&c_rest) {
        primes.push(c_rest);
    }
    primes.sort_unstable();

    // Per-prime factor tables: factor[e] = G(p^{v_p(c)+e}) · c_{p^e}(a).
    let mut tables: Vec<Vec<S>> = Vec::new();
    for &p in &primes {
        let vc = {
            let mut v = 0;
            let mut m = c;
            while m % p == 0 {
                m /= p;
                v += 1;
            }
            v
        };
        let va = {
            let mut v = 0;
            let mut m = a;
            while m % p == 0 {
                m /= p;
                v += 1;
            }
            v
        };
        let coprime_blocked = b % p == 0;
        let e_max = if coprime_blocked { 0 } else { va + 1 };
        let mut table = Vec::with_capacity(e_max as usize + 1);
        for e in 0..=e_max {
            let gv = g.prime_power(p, vc + e)?;
            let cv = ramanujan_sum_prime_power(p, e, va);
            table.push(gv * S::from_i64(cv));
        }
        tables.push(table);
    }
    let _ = sieve;
    // Expand the product of per-prime sums of nonzero factors. The value of
    // the full series is Π_p Σ_e factor_p(e), because terms are multiplicative
    // across the (finitely many) admissible exponent patterns.
    let mut out = S::one();
    for table in tables {
        let mut s = S::zero();
        for f in table {
            s = s + f;
        }
        out = out * s;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Heuristic limit estimation.
// ---------------------------------------------------------------------------

/// Knobs of the heuristic verdicts. Defaults follow the pinned policy:
/// a Cauchy window of 5 checkpoints at relative tolerance 1e-6, and a
/// divergence call requiring a fitted exponent above 0.05 with R² > 0.99
/// over the checkpoints with `x >= sqrt(x_max)`.
#[derive(Debug, Clone)]
pub struct EstimateOptions {
    pub cauchy_window: usize,
    pub cauchy_rel_tol: f64,
    pub divergence_min_exponent: f64,
    pub divergence_min_r2: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            cauchy_window: 5,
            cauchy_rel_tol: 1e-6,
            divergence_min_exponent: 0.05,
            divergence_min_r2: 0.99,
        }
    }
}

/// Heuristic verdict on the limit behaviour of a trace.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// The tail of the trace is flat at the configured tolerance.
    ConvergedEstimate {
        value: Complex64,
        cauchy_residual: f64,
    },
    /// `|sum|` grows like `x^exponent` over the fit window.
    Diverging { exponent: f64, r_squared: f64 },
    /// Neither signal was conclusive.
    Inconclusive,
}

/// A recorded trace of partial sums with its heuristic verdict.
#[derive(Debug, Clone)]
pub struct SeriesTrace {
    pub kind: SeriesKind,
    pub checkpoints: Vec<(f64, Complex64)>,
    pub verdict: Verdict,
}

/// Least-squares slope of `ln|sum|` against `ln x` over the checkpoints with
/// `x >= sqrt(x_max)`; returns `(exponent, r_squared)`.
pub fn growth_exponent(checkpoints: &[(f64, Complex64)]) -> Result<(f64, f64)> {
    let x_max = checkpoints
        .iter()
        .map(|&(x, _)| x)
        .fold(0.0f64, f64::max);
    let cut = x_max.sqrt();
    let pts: Vec<(f64, f64)> = checkpoints
        .iter()
        .filter(|&&(x, v)| x >= cut && v.norm() > 0.0)
        .map(|&(x, v)| (x.ln(), v.norm().ln()))
        .collect();
    if pts.len() < 8 {
        return Err(Error::NotGrowing(format!(
            "fit window has {} points, need at least 8",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::NotGrowing("degenerate fit window".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok((slope, r2))
}

/// Evaluate a trace over a schedule and attach a heuristic verdict.
///
/// Divergence is tested first (exponent fit over the top of the schedule);
/// otherwise the Cauchy window over the last checkpoints decides between a
/// converged estimate and an inconclusive verdict. Verdicts are heuristic:
/// they describe the trace, not the series.
pub fn estimate_limit<S: Scalar>(
    sieve: &Sieve,
    g: &CoefficientSpec<S>,
    kind: SeriesKind,
    schedule: &[f64],
    opts: &EstimateOptions,
) -> Result<SeriesTrace> {
    if schedule.len() < 4 {
        return Err(Error::Precondition(
            "estimate_limit needs a schedule of at least 4 points".into(),
        ));
    }
    if schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition(
            "estimate_limit schedule must be strictly increasing".into(),
        ));
    }
    let raw = scan(sieve, g, kind, schedule)?;
    let checkpoints: Vec<(f64, Complex64)> =
        raw.iter().map(|(x, v)| (*x, v.to_c64())).collect();
    let verdict = judge(&checkpoints, opts);
    Ok(SeriesTrace {
        kind,
        checkpoints,
        verdict,
    })
}

/// Verdict logic shared by [`estimate_limit`] and external traces.
pub fn judge(checkpoints: &[(f64, Complex64)], opts: &EstimateOptions) -> Verdict {
    if let Ok((slope, r2)) = growth_exponent(checkpoints) {
        let first = checkpoints.first().map(|c| c.1.norm()).unwrap_or(0.0);
        let last = checkpoints.last().map(|c| c.1.norm()).unwrap_or(0.0);
        if slope > opts.divergence_min_exponent && r2 > opts.divergence_min_r2 && last > first {
            return Verdict::Diverging {
                exponent: slope,
                r_squared: r2,
            };
        }
    }
    let w = opts.cauchy_window.min(checkpoints.len());
    if w >= 2 {
        let tail = &checkpoints[checkpoints.len() - w..];
        let last = tail[tail.len() - 1].1;
        let maxdiff = tail[..tail.len() - 1]
            .iter()
            .map(|&(_, v)| (v - last).norm())
            .fold(0.0f64, f64::max);
        let scale = last.norm().max(1.0);
        if maxdiff <= opts.cauchy_rel_tol * scale {
            return Verdict::ConvergedEstimate {
                value: last,
                cauchy_residual: maxdiff,
            };
        }
    }
    Verdict::Inconclusive
}

// ---------------------------------------------------------------------------
// Finiteness probe: the four equivalent convergence conditions.
// ---------------------------------------------------------------------------

/// Probe report for the equivalence "expansion converges at every argument ⇔
/// at every divisor of the conductor ⇔ the square-free trace at the
/// conductor converges ⇔ at every modulus avoiding hyper bad primes".
#[derive(Debug)]
pub struct FinitenessReport {
    pub conductor: u64,
    pub transparency_conductor: u64,
    pub probes: Vec<(String, Verdict)>,
    /// True when no probe contradicts another (all converged/inconclusive or
    /// all diverging/inconclusive).
    pub consistent: bool,
    /// Set when the default rule makes absolute convergence impossible.
    pub warning: Option<String>,
}

/// Run the finiteness probes with a given x budget per trace.
pub fn finiteness_check<S: Scalar>(
    sieve: &Sieve,
    g: &CoefficientSpec<S>,
    x_budget: f64,
    opts: &EstimateOptions,
) -> Result<FinitenessReport> {
    let cond = g.conductors()?;
    let schedule = geometric_schedule(16.0, x_budget, 24);
    let mut probes = Vec::new();
    // Expansion series at every divisor of the conductor.
    for a in sieve.divisors(cond.n)? {
        let t = estimate_limit(sieve, g, SeriesKind::Expansion { a }, &schedule, opts)?;
        probes.push((format!("expansion at {a}"), t.verdict));
    }
    // Square-free trace at the conductor.
    let t = estimate_limit(
        sieve,
        g,
        SeriesKind::CoprimeMobius { b: cond.n.max(1) },
        &schedule,
        opts,
    )?;
    probes.push((format!("coprime trace at conductor {}", cond.n), t.verdict));
    // Traces at moduli avoiding hyper bad primes.
    let hyper: Vec<u64> = cond
        .classifications
        .iter()
        .filter(|c| c.is_hyper_bad())
        .map(|c| c.p)
        .collect();
    let mut sample_b: Vec<u64> = vec![1];
    if let Some(p) = sieve.primes().iter().find(|p| !hyper.contains(p)) {
        sample_b.push(*p);
    }
    for b in sample_b {
        let t = estimate_limit(sieve, g, SeriesKind::CoprimeMobius { b }, &schedule, opts)?;
        probes.push((format!("coprime trace at {b}"), t.verdict));
    }
    let any_div = probes
        .iter()
        .any(|(_, v)| matches!(v, Verdict::Diverging { .. }));
    let any_conv = probes
        .iter()
        .any(|(_, v)| matches!(v, Verdict::ConvergedEstimate { .. }));
    let warning = if matches!(g.default_rule(), DefaultRule::OneEverywhere) {
        Some("constant default rule: the square-free trace cannot converge absolutely".into())
    } else {
        None
    };
    Ok(FinitenessReport {
        conductor: cond.n,
        transparency_conductor: cond.n_t,
        probes,
        consistent: !(any_div && any_conv),
        warning,
    })
}

/// Geometric checkpoint schedule from `lo` to `hi` with `n` points.
pub fn geometric_schedule(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && hi > lo && lo >= 1.0);
    let ratio = (hi / lo).powf(1.0 / (n as f64 - 1.0));
    let mut out: Vec<f64> = (0..n).map(|i| lo * ratio.powi(i as i32)).collect();
    out.dedup_by(|a, b| a.floor() == b.floor());
    out
}

// ---------------------------------------------------------------------------
// Partial-sum identity suite.
// ---------------------------------------------------------------------------

/// The seven partial-sum identities. Every identity holds for all real
/// truncation points `x >= 0`, with the inner cuts at real quotients `x/d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentityKind {
    /// Coprime-trace recursion: for `(b,c) = 1`,
    /// `S(b,x) = Σ_{d|c} G(d) μ(d) S(bc, x/d)`.
    CoprimeRecursion { b: u64, c: u64 },
    /// Expansion through the coprime trace:
    /// `R(a,x) = Σ_{d | a·rad a} G(d) c_d(a) S(a, x/d)`.
    ExpansionViaCoprime { a: u64 },
    /// Expansion recursion: for `a = bc`, `(b,c) = 1`, and `G` completely
    /// multiplicative along every prime of `c`,
    /// `R(a,x) = Σ_{h|c} G(h) h R(b, x/h)`.
    ExpansionRecursion { b: u64, c: u64 },
    /// Dilated sum through the coprime trace:
    /// `L(d,x) = Σ_{l|d} μ(l) G(ld) S(d, x/l)`.
    DilatedViaCoprime { d: u64 },
    /// Dilation push-through: for `G` completely multiplicative along every
    /// prime of `c`, `L(bc,x) = G(c) L(b,x)`.
    DilatedRecursion { b: u64, c: u64 },
    /// Expansion through dilated sums:
    /// `R(a,x) = Σ_{d|a} d · L(d, x/d)`.
    ExpansionViaDilated { a: u64 },
    /// Prime-lifting transform of the constrained kind: for `p ∤ abc` and
    /// `Δ = G(p^w) G(p) − G(p^{w+1}) != 0`,
    /// `F(a,pb,c)(x) = [G(p) F(a,b,p^w c)(x) − G(p^{w+1}) F(a,b,c)(x)] / Δ`.
    ConstrainedTransform { a: u64, b: u64, c: u64, p: u64, w: u32 },
}

/// Residual report of one identity over a set of truncation points.
#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub kind: IdentityKind,
    pub max_residual: f64,
    pub worst_x: f64,
}

fn cut(x: f64) -> usize {
    if x < 1.0 {
        0
    } else {
        x.floor() as usize
    }
}

/// Evaluate one identity at every `x` in `xs` and report the worst residual.
/// In the exact regime a residual of `0.0` means exact equality at every cut.
pub fn identity_residual<S: Scalar>(
    sieve: &Sieve,
    g: &CoefficientSpec<S>,
    kind: IdentityKind,
    xs: &[f64],
) -> Result<IdentityReport> {
    let x_max = xs.iter().cloned().fold(0.0f64, f64::max);
    let grid = cut(x_max) as u64;
    let mut max_residual = 0.0f64;
    let mut worst_x = 0.0f64;
    let mut record = |x: f64, r: f64| {
        if r > max_residual {
            max_residual = r;
            worst_x = x;
        }
    };
    match kind {
        IdentityKind::CoprimeRecursion { b, c } => {
            if gcd(b, c) != 1 {
                return Err(Error::Precondition("moduli b and c must be coprime".into()));
            }
            let lhs = prefix(sieve, g, SeriesKind::CoprimeMobius { b }, grid)?;
            let bc = b.checked_mul(c).ok_or(Error::Overflow("b*c"))?;
            let inner = prefix(sieve, g, SeriesKind::CoprimeMobius { b: bc }, grid)?;
            let divisors = sieve.divisors(c)?;
            for &x in xs {
                let mut rhs = S::zero();
                for &d in &divisors {
                    let mu = sieve.mobius(d)?;
                    if mu == 0 {
                        continue;
                    }
                    let w = g.value_at(sieve, d)? * S::from_i64(mu);
                    rhs = rhs + w * inner[cut(x / d as f64)].clone();
                }
                record(x, residual(&lhs[cut(x)], &rhs));
            }
        }
        IdentityKind::ExpansionViaCoprime { a } => {
            let lhs = prefix(sieve, g, SeriesKind::Expansion { a }, grid)?;
            let inner = prefix(sieve, g, SeriesKind::CoprimeMobius { b: a }, grid)?;
            let rad = sieve.radical(a)?;
            let m = a.checked_mul(rad).ok_or(Error::Overflow("a*rad(a)"))?;
            let divisors = sieve.divisors(m)?;
            for &x in xs {
                let mut rhs = S::zero();
                for &d in &divisors {
                    let cd = ramanujan_sum(sieve, d, a)?;
                    if cd == 0 {
                        continue;
                    }
                    let w = g.value_at(sieve, d)? * S::from_i64(cd);
                    rhs = rhs + w * inner[cut(x / d as f64)].clone();
                }
                record(x, residual(&lhs[cut(x)], &rhs));
            }
        }
        IdentityKind::ExpansionRecursion { b, c } => {
            if gcd(b, c) != 1 {
                return Err(Error::Precondition("parts b and c must be coprime".into()));
            }
            require_cm_along(g, sieve, c)?;
            let a = b.checked_mul(c).ok_or(Error::Overflow("b*c"))?;
            let lhs = prefix(sieve, g, SeriesKind::Expansion { a }, grid)?;
            let inner = prefix(sieve, g, SeriesKind::Expansion { a: b }, grid)?;
            let divisors = sieve.divisors(c)?;
            for &x in xs {
                let mut rhs = S::zero();
                for &h in &divisors {
                    let w = g.value_at(sieve, h)? * S::from_u64(h);
                    rhs = rhs + w * inner[cut(x / h as f64)].clone();
                }
                record(x, residual(&lhs[cut(x)], &rhs));
            }
        }
        IdentityKind::DilatedViaCoprime { d } => {
            let lhs = prefix(sieve, g, SeriesKind::DilatedMobius { d }, grid)?;
            let inner = prefix(sieve, g, SeriesKind::CoprimeMobius { b: d }, grid)?;
            let divisors = sieve.divisors(d)?;
            for &x in xs {
                let mut rhs = S::zero();
                for &l in &divisors {
                    let mu = sieve.mobius(l)?;
                    if mu == 0 {
                        continue;
                    }
                    let ld = l.checked_mul(d).ok_or(Error::Overflow("l*d"))?;
                    let w = S::from_i64(mu) * g.value_at(sieve, ld)?;
                    rhs = rhs + w * inner[cut(x / l as f64)].clone();
                }
                record(x, residual(&lhs[cut(x)], &rhs));
            }
        }
        IdentityKind::DilatedRecursion { b, c } => {
            require_cm_along(g, sieve, c)?;
            let bc = b.checked_mul(c).ok_or(Error::Overflow("b*c"))?;
            let lhs = prefix(sieve, g, SeriesKind::DilatedMobius { d: bc }, grid)?;
            let inner = prefix(sieve, g, SeriesKind::DilatedMobius { d: b }, grid)?;
            let gc = g.value_at(sieve, c)?;
            for &x in xs {
                let rhs = gc.clone() * inner[cut(x)].clone();
                record(x, residual(&lhs[cut(x)], &rhs));
            }
        }
        IdentityKind::ExpansionViaDilated { a } => {
            let lhs = prefix(sieve, g, SeriesKind::Expansion { a }, grid)?;
            let divisors = sieve.divisors(a)?;
            let mut inners = Vec::new();
            for &d in &divisors {
                inners.push(prefix(sieve, g, SeriesKind::DilatedMobius { d }, grid)?);
            }
            for &x in xs {
                let mut rhs = S::zero();
                for (i, &d) in divisors.iter().enumerate() {
                    rhs = rhs + S::from_u64(d) * inners[i][cut(x / d as f64)].clone();
                }
                record(x, residual(&lhs[cut(x)], &rhs));
            }
        }
        IdentityKind::ConstrainedTransform { a, b, c, p, w } => {
            if a % p == 0 || b % p == 0 || c % p == 0 {
                return Err(Error::Precondition(format!(
                    "lifting prime {p} must not divide a, b or c"
                )));
            }
            let delta = g.prime_power(p, w)? * g.prime_power(p, 1)? - g.prime_power(p, w + 1)?;
            if delta.is_zero() {
                return Err(Error::Precondition(format!(
                    "lifting prime {p} at order {w} has a vanishing pivot"
                )));
            }
            let pb = p.checked_mul(b).ok_or(Error::Overflow("p*b"))?;
            let pwc = p
                .checked_pow(w)
                .and_then(|pw| pw.checked_mul(c))
                .ok_or(Error::Overflow("p^w * c"))?;
            let lhs = prefix(sieve, g, SeriesKind::Constrained { a, b: pb, c }, grid)?;
            let lifted = prefix(sieve, g, SeriesKind::Constrained { a, b, c: pwc }, grid)?;
            let plain = prefix(sieve, g, SeriesKind::Constrained { a, b, c }, grid)?;
            let gp = g.prime_power(p, 1)?;
            let gpw1 = g.prime_power(p, w + 1)?;
            for &x in xs {
                let i = cut(x);
                let rhs = (gp.clone() * lifted[i].clone() - gpw1.clone() * plain[i].clone())
                    / delta.clone();
                record(x, residual(&lhs[i], &rhs));
            }
        }
    }
    Ok(IdentityReport {
        kind,
        max_residual,
        worst_x,
    })
}

/// Check that `G` is completely multiplicative along every prime of `c`.
fn require_cm_along<S: Scalar>(g: &CoefficientSpec<S>, sieve: &Sieve, c: u64) -> Result<()> {
    for (p, _) in sieve.factorize(c)?.factors {
        if !g.cm_index(p)?.is_infinite() {
            return Err(Error::Precondition(format!(
                "complete multiplicativity along {p} is required but breaks at a finite power"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{PrimeEntry, TailRule};
    use crate::scalar::ExactC;

    fn sample_spec() -> CoefficientSpec<ExactC> {
        CoefficientSpec::from_entries(
            vec![
                (
                    2,
                    PrimeEntry {
                        values: vec![ExactC::from_ratio(1, 2), ExactC::from_ratio(-1, 3)],
                        tail: TailRule::Zero,
                    },
                ),
                (
                    3,
                    PrimeEntry {
                        values: vec![ExactC::from_i64(2)],
                        tail: TailRule::Geometric {
                            ratio: ExactC::from_i64(2),
                        },
                    },
                ),
                (
                    5,
                    PrimeEntry {
                        values: vec![ExactC::from_i64(1), ExactC::from_i64(1), ExactC::from_i64(4)],
                        tail: TailRule::Zero,
                    },
                ),
            ],
            DefaultRule::ZeroOnPrimes,
        )
        .unwrap()
    }

    /// Oracle: term-by-term definition of the constrained sum.
    fn oracle(sieve: &Sieve, g: &CoefficientSpec<ExactC>, kind: SeriesKind, x: f64) -> ExactC {
        let (a, b, c) = kind.as_constrained();
        let mut sum = ExactC::zero();
        let qm = if x < 1.0 { 0 } else { x.floor() as u64 };
        for q in 1..=qm {
            if gcd(q, b) != 1 {
                continue;
            }
            let gv = g.value_at(sieve, c * q).unwrap();
            let cv = ramanujan_sum(sieve, q, a).unwrap();
            sum = sum + gv * ExactC::from_i64(cv);
        }
        sum
    }

    #[test]
    fn partial_sums_match_oracle_and_specialise() {
        let sieve = Sieve::new(5000);
        let g = sample_spec();
        for x in [0.0, 0.7, 1.0, 7.3, 24.0, 60.9] {
            for kind in [
                SeriesKind::Expansion { a: 12 },
                SeriesKind::CoprimeMobius { b: 6 },
                SeriesKind::DilatedMobius { d: 4 },
                SeriesKind::Constrained { a: 12, b: 7, c: 5 },
            ] {
                let got = partial_sum(&sieve, &g, kind, x).unwrap();
                assert_eq!(got, oracle(&sieve, &g, kind, x), "{kind:?} x={x}");
                // The constrained view is the same series.
                let (a, b, c) = kind.as_constrained();
                let via_f =
                    partial_sum(&sieve, &g, SeriesKind::Constrained { a, b, c }, x).unwrap();
                assert_eq!(got, via_f);
            }
        }
    }

    #[test]
    fn step_function_in_x() {
        let sieve = Sieve::new(1000);
        let g = sample_spec();
        let kind = SeriesKind::Expansion { a: 10 };
        for n in 1..=30u64 {
            let at = partial_sum(&sieve, &g, kind, n as f64).unwrap();
            let mid = partial_sum(&sieve, &g, kind, n as f64 + 0.999).unwrap();
            assert_eq!(at, mid);
        }
        assert_eq!(partial_sum(&sieve, &g, kind, 0.4).unwrap(), ExactC::zero());
    }

    #[test]
    fn exact_sum_is_the_stable_tail() {
        let sieve = Sieve::new(100_000);
        let g = sample_spec();
        for kind in [
            SeriesKind::Expansion { a: 40 },
            SeriesKind::CoprimeMobius { b: 3 },
            SeriesKind::DilatedMobius { d: 12 },
            SeriesKind::Constrained { a: 20, b: 3, c: 8 },
        ] {
            let exact = exact_sum(&sieve, &g, kind).unwrap();
            // Far beyond the support every partial sum equals the series.
            let far = partial_sum(&sieve, &g, kind, 90_000.0).unwrap();
            assert_eq!(exact, far, "{kind:?}");
        }
    }

    #[test]
    fn exact_sum_requires_zero_default() {
        let sieve = Sieve::new(100);
        let g: CoefficientSpec<ExactC> = CoefficientSpec::new(
            Default::default(),
            DefaultRule::PowerLaw {
                s: ExactC::from_i64(2),
                negated: false,
            },
        )
        .unwrap();
        assert!(matches!(
            exact_sum(&sieve, &g, SeriesKind::Expansion { a: 1 }),
            Err(Error::FinitenessNotProvable)
        ));
    }

    #[test]
    fn identity_suite_exact_zero_residuals() {
        let sieve = Sieve::new(20_000);
        let g = sample_spec();
        let xs: Vec<f64> = (0..=120).map(|i| i as f64).collect();
        let checks = vec![
            IdentityKind::CoprimeRecursion { b: 7, c: 10 },
            IdentityKind::ExpansionViaCoprime { a: 12 },
            // 3 is completely multiplicative along its powers here.
            IdentityKind::ExpansionRecursion { b: 20, c: 9 },
            IdentityKind::DilatedViaCoprime { d: 12 },
            IdentityKind::DilatedRecursion { b: 10, c: 3 },
            IdentityKind::ExpansionViaDilated { a: 18 },
            IdentityKind::ConstrainedTransform {
                a: 9,
                b: 5,
                c: 5,
                p: 2,
                w: 1,
            },
        ];
        for kind in checks {
            let rep = identity_residual(&sieve, &g, kind, &xs).unwrap();
            assert_eq!(rep.max_residual, 0.0, "{kind:?} worst at x={}", rep.worst_x);
        }
    }

    #[test]
    fn identity_preconditions_enforced() {
        let sieve = Sieve::new(2000);
        let g = sample_spec();
        let xs = [10.0];
        assert!(identity_residual(
            &sieve,
            &g,
            IdentityKind::CoprimeRecursion { b: 6, c: 10 },
            &xs
        )
        .is_err());
        // 2 is not completely multiplicative along its powers in this spec.
        assert!(identity_residual(
            &sieve,
            &g,
            IdentityKind::ExpansionRecursion { b: 9, c: 2 },
            &xs
        )
        .is_err());
        // Pivot vanishes when both coefficient values are zero.
        assert!(identity_residual(
            &sieve,
            &g,
            IdentityKind::ConstrainedTransform {
                a: 9,
                b: 5,
                c: 5,
                p: 7,
                w: 1
            },
            &xs
        )
        .is_err());
    }

    #[test]
    fn verdict_on_finite_support_is_converged() {
        let sieve = Sieve::new(20_000);
        let g = sample_spec();
        let schedule = geometric_schedule(16.0, 16_000.0, 20);
        let t = estimate_limit(
            &sieve,
            &g,
            SeriesKind::CoprimeMobius { b: 1 },
            &schedule,
            &EstimateOptions::default(),
        )
        .unwrap();
        match t.verdict {
            Verdict::ConvergedEstimate {
                value,
                cauchy_residual,
            } => {
                assert_eq!(cauchy_residual, 0.0);
                let exact = exact_sum(&sieve, &g, SeriesKind::CoprimeMobius { b: 1 }).unwrap();
                assert!((value - exact.to_c64()).norm() < 1e-12);
            }
            v => panic!("expected convergence, got {v:?}"),
        }
    }
}
