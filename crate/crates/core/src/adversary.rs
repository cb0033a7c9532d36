//! Lower-bound constructions, the denial-of-service tail and random instances.
//!
//! The adaptive constructions defer processing times to triggers; the engine
//! commits them at the trigger instant through [`evaluate_commit`]. The shipped
//! scripts fire at fixed times and are tuned to the built-in alpha-clairvoyant
//! policy.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use crate::error::{Error, Result};
use crate::model::{AdversaryScript, Alpha, CommitRule, Instance, Job, JobId, Trigger};
use crate::scalar::Scalar;

/// Parameters shared by the generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenParams<T> {
    pub alpha: Alpha<T>,
    pub k: u32,
    pub seed: u64,
    pub dos_m: Option<u32>,
}

/// A generated instance with the instant at which alive jobs are counted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerBoundInstance<T> {
    pub instance: Instance<T>,
    pub measure_at: T,
}

/// Processing times chosen by a trigger for the jobs deferred to it.
///
/// `observed` holds `(job, elapsed work at the firing time)`.
pub fn evaluate_commit<T: Scalar>(
    rule: &CommitRule<T>,
    observed: &[(JobId, T)],
    alpha: &Alpha<T>,
) -> Result<Vec<(JobId, T)>> {
    match rule {
        CommitRule::Fixed(values) => observed
            .iter()
            .map(|(id, _)| {
                values
                    .get(id)
                    .cloned()
                    .map(|p| (*id, p))
                    .ok_or_else(|| Error::InvalidInstance(format!("fixed rule has no value for job {id}")))
            })
            .collect(),
        CommitRule::ScaledProgress { additive } => {
            if alpha.is_zero() {
                return Err(Error::InvalidParameter("scaled_progress needs alpha > 0".into()));
            }
            // rank by observed progress, ties by id
            let mut ranked = observed.to_vec();
            ranked.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
            Ok(ranked
                .into_iter()
                .map(|(id, y)| (id, y / alpha.value().clone() + additive.clone()))
                .collect())
        }
        CommitRule::LeaderDouble { base } => {
            if observed.len() != 2 {
                return Err(Error::InvalidInstance(format!(
                    "leader_double needs exactly two jobs, got {}",
                    observed.len()
                )));
            }
            let mut ranked = observed.to_vec();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            let two = T::from_int(2);
            Ok(vec![
                (ranked[0].0, two * base.clone()),
                (ranked[1].0, base.clone()),
            ])
        }
    }
}

fn require_open_alpha<T: Scalar>(alpha: &Alpha<T>) -> Result<()> {
    if alpha.is_zero() || alpha.is_one() {
        return Err(Error::InvalidParameter(format!(
            "construction needs 0 < alpha < 1, got {}",
            alpha.value()
        )));
    }
    Ok(())
}

/// Time unit of the first deterministic construction: the smallest positive
/// integer `u` with `u * (1/alpha - 1 + 1/k) >= 1`, so that every job still has
/// at least one unit of work left at the trigger under equal sharing.
pub fn lb1_unit<T: Scalar>(alpha: &Alpha<T>, k: u32) -> T {
    let a = alpha.value().clone();
    let per_unit = T::one() / a - T::one() + T::one() / T::from_int(k as i64);
    let needed = T::one() / per_unit;
    let floor = needed.floor_int();
    if floor == needed {
        T::max_of(floor, T::one())
    } else {
        floor + T::one()
    }
}

/// `k` jobs at time 0 whose processing times are fixed at time `u * k` to
/// `p_i = y_i / alpha + u / k`, `y_i` being the work job `i` received so far.
/// `u` is [`lb1_unit`] (1 whenever `alpha <= 1/2`).
pub fn gen_det_lb1<T: Scalar>(alpha: &Alpha<T>, k: u32) -> Result<LowerBoundInstance<T>> {
    require_open_alpha(alpha)?;
    if k < 2 {
        return Err(Error::InvalidParameter("lb1 needs k >= 2".into()));
    }
    let unit = lb1_unit(alpha, k);
    let fire_at = unit.clone() * T::from_int(k as i64);
    let jobs = (1..=k).map(|id| Job::deferred(id, T::zero(), 0)).collect();
    let script = AdversaryScript {
        triggers: vec![Trigger {
            id: 0,
            fire_at: fire_at.clone(),
            rule: CommitRule::ScaledProgress {
                additive: unit / T::from_int(k as i64),
            },
        }],
    };
    Ok(LowerBoundInstance {
        instance: Instance::new(jobs, alpha.clone(), Some(script))?,
        measure_at: fire_at,
    })
}

/// `(4 + alpha) / alpha`.
pub fn lb2_lambda<T: Scalar>(alpha: &Alpha<T>) -> T {
    (T::from_int(4) + alpha.value().clone()) / alpha.value().clone()
}

/// Start times and lengths of phases `k, ..., 1` (phase `i` lasts `lambda^i`),
/// plus the end of the last phase.
fn lb2_phases<T: Scalar>(alpha: &Alpha<T>, k: u32) -> (Vec<(u32, T, T)>, T) {
    let lambda = lb2_lambda(alpha);
    let mut phases = Vec::new();
    let mut start = T::zero();
    for i in (1..=k).rev() {
        let mut len = T::one();
        for _ in 0..i {
            len = len * lambda.clone();
        }
        phases.push((i, start.clone(), len.clone()));
        start = start + len;
    }
    (phases, start)
}

/// `k` phases; phase `i` releases two jobs at its start and commits at
/// `start + alpha * lambda^i`: `2 lambda^i` to the job with more progress and
/// `lambda^i` to the other.
pub fn gen_det_lb2<T: Scalar>(alpha: &Alpha<T>, k: u32) -> Result<LowerBoundInstance<T>> {
    require_open_alpha(alpha)?;
    if k < 1 {
        return Err(Error::InvalidParameter("lb2 needs k >= 1".into()));
    }
    let (phases, end) = lb2_phases(alpha, k);
    let mut jobs = Vec::new();
    let mut triggers = Vec::new();
    for (n, (_, start, len)) in phases.into_iter().enumerate() {
        let trigger = n as u32;
        jobs.push(Job::deferred(2 * trigger + 1, start.clone(), trigger));
        jobs.push(Job::deferred(2 * trigger + 2, start.clone(), trigger));
        triggers.push(Trigger {
            id: trigger,
            fire_at: start + alpha.value().clone() * len.clone(),
            rule: CommitRule::LeaderDouble { base: len },
        });
    }
    Ok(LowerBoundInstance {
        instance: Instance::new(jobs, alpha.clone(), Some(AdversaryScript { triggers }))?,
        measure_at: end,
    })
}

/// Oblivious variant of the phase construction: in every phase a fair coin
/// picks which of the two jobs gets `lambda^i` (the other gets `2 lambda^i`).
pub fn gen_rand_phase<T: Scalar>(alpha: &Alpha<T>, k: u32, seed: u64) -> Result<LowerBoundInstance<T>> {
    require_open_alpha(alpha)?;
    if k < 1 {
        return Err(Error::InvalidParameter("rand32 needs k >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (phases, end) = lb2_phases(alpha, k);
    let mut jobs = Vec::new();
    for (n, (_, start, len)) in phases.into_iter().enumerate() {
        let first_short: bool = rng.random();
        let long = T::from_int(2) * len.clone();
        let (p1, p2) = if first_short { (len, long) } else { (long, len) };
        jobs.push(Job::new(2 * n as u32 + 1, start.clone(), p1));
        jobs.push(Job::new(2 * n as u32 + 2, start, p2));
    }
    Ok(LowerBoundInstance {
        instance: Instance::new(jobs, alpha.clone(), None)?,
        measure_at: end,
    })
}

/// Largest `m` with `m^root <= value`.
fn int_root_floor(value: &BigUint, root: u32) -> BigUint {
    if value.is_zero() {
        return BigUint::zero();
    }
    let mut lo = BigUint::one();
    let mut hi = BigUint::one();
    while hi.pow(root) <= *value {
        hi <<= 1;
    }
    // lo^root <= value < hi^root
    while &hi - &lo > BigUint::one() {
        let mid: BigUint = (&lo + &hi) >> 1;
        if mid.pow(root) <= *value {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `floor(2^(1 / (2 - 2 alpha)))` and `floor(3 (k - k^(3/4)))`, computed exactly.
pub fn rand_lb_sizes<T: Scalar>(alpha: &Alpha<T>) -> Result<(u64, u64)> {
    let half = T::half();
    if *alpha.value() <= half || alpha.is_one() {
        return Err(Error::InvalidParameter(format!(
            "randomized construction needs 1/2 < alpha < 1, got {}",
            alpha.value()
        )));
    }
    let exponent = T::one() / (T::from_int(2) - T::from_int(2) * alpha.value().clone());
    let (a, b) = exponent
        .to_i64_pair()
        .ok_or_else(|| Error::InvalidParameter("alpha has too large a representation".into()))?;
    if a > 62 * b {
        return Err(Error::InvalidParameter(format!("k = 2^({a}/{b}) jobs is too many")));
    }
    let k = int_root_floor(&(BigUint::one() << (a as u64)), b as u32);
    let k: u64 = k.try_into().expect("k below 2^62");
    // ceil(3 k^(3/4)) = smallest m with m^4 >= 81 k^3
    let target = BigUint::from(81u32) * BigUint::from(k).pow(3);
    let floor_root = int_root_floor(&target, 4);
    let ceil_root = if floor_root.pow(4) == target {
        floor_root
    } else {
        floor_root + BigUint::one()
    };
    let ceil_root: u64 = ceil_root.try_into().expect("fits");
    Ok((k, 3 * k - ceil_root))
}

/// Draws `p_j = y_j + 1` with `y_j` geometric on `{1, 2, ...}` (success 1/2).
pub fn geometric_proc(rng: &mut impl Rng) -> i64 {
    let g = Geometric::new(0.5).expect("valid probability");
    g.sample(rng) as i64 + 2
}

/// `k` jobs at time 0 with random integer processing times, measured at
/// `floor(3 (k - k^(3/4)))`.
pub fn gen_rand_lb<T: Scalar>(alpha: &Alpha<T>, seed: u64) -> Result<LowerBoundInstance<T>> {
    let (k, t) = rand_lb_sizes(alpha)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jobs = (1..=k)
        .map(|id| Job::new(id as u32, T::zero(), T::from_int(geometric_proc(&mut rng))))
        .collect();
    Ok(LowerBoundInstance {
        instance: Instance::new(jobs, alpha.clone(), None)?,
        measure_at: T::from_int(t as i64),
    })
}

/// Appends `m` unit jobs released at `t + 1, ..., t + m`.
pub fn append_dos_tail<T: Scalar>(instance: &Instance<T>, t: &T, m: u32) -> Result<Instance<T>> {
    if *t < T::zero() {
        return Err(Error::InvalidParameter("tail start must be nonnegative".into()));
    }
    if m < 1 {
        return Err(Error::InvalidParameter("tail needs M >= 1".into()));
    }
    let first = instance.max_id().map_or(1, |id| id.0 + 1);
    let extra = (0..m)
        .map(|k| Job::new(first + k, t.clone() + T::from_int(k as i64 + 1), T::one()))
        .collect();
    instance.with_extra_jobs(extra)
}

/// `n` jobs with integer releases in `[0, max_release]` and integer processing
/// times in `[1, max_p]`, deterministic in `seed`.
pub fn gen_random_instance<T: Scalar>(
    n: usize,
    max_p: u32,
    max_release: u32,
    seed: u64,
    alpha: &Alpha<T>,
) -> Result<Instance<T>> {
    if n < 1 || max_p < 1 {
        return Err(Error::InvalidParameter("need n >= 1 and max_p >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jobs = (1..=n)
        .map(|id| {
            let r = rng.random_range(0..=max_release) as i64;
            let p = rng.random_range(1..=max_p) as i64;
            Job::new(id as u32, T::from_int(r), T::from_int(p))
        })
        .collect();
    Instance::new(jobs, alpha.clone(), None)
}

/// A reproducible corpus: instance `k` has `1 + k % max_n` jobs and takes
/// its alpha from `alphas[k % alphas.len()]`.
pub fn random_corpus<T: Scalar>(
    count: usize,
    max_n: usize,
    max_p: u32,
    max_release: u32,
    seed: u64,
    alphas: &[Alpha<T>],
) -> Result<Vec<Instance<T>>> {
    if alphas.is_empty() {
        return Err(Error::InvalidParameter("corpus needs at least one alpha".into()));
    }
    (0..count)
        .map(|k| {
            let n = 1 + k % max_n.max(1);
            let item_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64);
            gen_random_instance(n, max_p, max_release, item_seed, &alphas[k % alphas.len()])
        })
        .collect()
}

/// Values committed by a fixed rule, for building scripted instances by hand.
pub fn fixed_rule<T: Scalar>(values: &[(u32, T)]) -> CommitRule<T> {
    CommitRule::Fixed(values.iter().map(|(id, p)| (JobId(*id), p.clone())).collect::<BTreeMap<_, _>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn alpha(n: i64, d: i64) -> Alpha<Rational> {
        Alpha::new(q(n, d)).unwrap()
    }

    #[test]
    fn lambda_at_half() {
        assert_eq!(lb2_lambda(&alpha(1, 2)), q(9, 1));
    }

    #[test]
    fn lb2_shape() {
        let lb = gen_det_lb2(&alpha(1, 2), 2).unwrap();
        assert_eq!(lb.instance.len(), 4);
        let releases: Vec<_> = lb.instance.jobs().iter().map(|j| j.release.clone()).collect();
        assert_eq!(releases, vec![q(0, 1), q(0, 1), q(81, 1), q(81, 1)]);
        assert_eq!(lb.measure_at, q(90, 1));
        let triggers = &lb.instance.adversary().unwrap().triggers;
        assert_eq!(triggers[0].fire_at, q(81, 2));
        assert_eq!(triggers[1].fire_at, q(81, 1) + q(9, 2));
    }

    #[test]
    fn lb1_shape() {
        for k in [2u32, 5, 9] {
            let lb = gen_det_lb1(&alpha(1, 3), k).unwrap();
            assert_eq!(lb.instance.len(), k as usize);
            assert!(lb.instance.jobs().iter().all(|j| j.release == q(0, 1)));
        }
        assert_eq!(lb1_unit(&alpha(1, 2), 4), q(1, 1));
        // 1/alpha - 1 + 1/24 = 3/8 at alpha = 3/4, so three units are needed
        assert_eq!(lb1_unit(&alpha(3, 4), 24), q(3, 1));
        assert!(gen_det_lb1(&alpha(0, 1), 4).is_err());
        assert!(gen_det_lb1(&alpha(1, 2), 1).is_err());
    }

    #[test]
    fn rand_lb_sizes_match_formulas() {
        assert_eq!(rand_lb_sizes(&alpha(3, 4)).unwrap(), (4, 3));
        assert_eq!(rand_lb_sizes(&alpha(7, 8)).unwrap(), (16, 24));
        // exponent 3/2: floor(2^1.5) = 2, floor(3 (2 - 2^0.75)) = floor(0.954...) = 0
        assert_eq!(rand_lb_sizes(&alpha(2, 3)).unwrap(), (2, 0));
        assert!(rand_lb_sizes(&alpha(1, 2)).is_err());
    }

    #[test]
    fn geometric_mean_is_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 100_000;
        let total: i64 = (0..draws).map(|_| geometric_proc(&mut rng)).sum();
        let mean = total as f64 / draws as f64;
        assert!((mean - 3.0).abs() / 3.0 < 0.02, "mean {mean}");
    }

    #[test]
    fn dos_tail() {
        let base = Instance::from_pairs(q(1, 2), &[(q(0, 1), q(5, 1))]).unwrap();
        let with = append_dos_tail(&base, &q(10, 1), 3).unwrap();
        let tail: Vec<_> = with.jobs()[1..].iter().map(|j| (j.release.clone(), j.proc.clone())).collect();
        assert_eq!(tail.len(), 3);
        for (k, (r, p)) in tail.into_iter().enumerate() {
            assert_eq!(r, q(11 + k as i64, 1));
            assert_eq!(p, crate::model::ProcTime::Known(q(1, 1)));
        }
        let empty = Instance::<Rational>::new(vec![], alpha(1, 2), None).unwrap();
        assert_eq!(append_dos_tail(&empty, &q(0, 1), 2).unwrap().len(), 2);
    }

    #[test]
    fn random_instances_are_seeded() {
        let a = gen_random_instance::<Rational>(6, 8, 10, 42, &alpha(1, 2)).unwrap();
        let b = gen_random_instance::<Rational>(6, 8, 10, 42, &alpha(1, 2)).unwrap();
        assert_eq!(a, b);
        assert_eq!(gen_random_instance::<Rational>(1, 8, 10, 1, &alpha(1, 2)).unwrap().len(), 1);
    }

    #[test]
    fn commit_rules() {
        let obs = vec![(JobId(1), q(1, 1)), (JobId(2), q(1, 1))];
        let lead = evaluate_commit(&CommitRule::LeaderDouble { base: q(9, 1) }, &obs, &alpha(1, 2)).unwrap();
        assert_eq!(lead, vec![(JobId(1), q(18, 1)), (JobId(2), q(9, 1))]);
        let scaled =
            evaluate_commit(&CommitRule::ScaledProgress { additive: q(1, 4) }, &obs, &alpha(1, 2)).unwrap();
        assert_eq!(scaled, vec![(JobId(1), q(9, 4)), (JobId(2), q(9, 4))]);
        let fixed = fixed_rule(&[(1, q(3, 1))]);
        assert!(evaluate_commit(&fixed, &obs, &alpha(1, 2)).is_err());
    }
}
