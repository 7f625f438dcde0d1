use rand::distributions::Open01;
use rand::Rng;

use super::{Coords, ParamRanges, Particle};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-coordinate random factors `(r_personal, r_global)`, each in (0, 1).
pub type Draws<T> = [(T, T); 3];

/// Constriction coefficient `chi = 2K / |2 - phi - sqrt(phi^2 - 4 phi)|`
/// with `phi = phi_personal + phi_global`, which must exceed 4.
pub fn constriction<T: Scalar>(k_scale: T, phi_personal: T, phi_global: T) -> Result<T> {
    let phi = phi_personal + phi_global;
    if !(phi > T::lit(4.0)) {
        return Err(Error::Domain(format!(
            "phi_personal + phi_global = {phi} must exceed 4"
        )));
    }
    if !(k_scale > T::zero() && k_scale < T::one()) {
        return Err(Error::Domain(format!("K = {k_scale} must lie in (0, 1)")));
    }
    let two = T::lit(2.0);
    let root = (phi * phi - T::lit(4.0) * phi).sqrt();
    Ok(two * k_scale / (two - phi - root).abs())
}

pub(crate) fn draw<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> Draws<T> {
    let mut out = [(T::zero(), T::zero()); 3];
    for d in out.iter_mut() {
        let a: f64 = rng.sample(Open01);
        let b: f64 = rng.sample(Open01);
        *d = (T::lit(a), T::lit(b));
    }
    out
}

/// `v + phi_p r_p (pbest - x) + phi_g r_g (attractor - x)` per coordinate.
pub fn classic_velocity<T: Scalar>(
    velocity: &Coords<T>,
    position: &Coords<T>,
    personal_best: &Coords<T>,
    attractor: &Coords<T>,
    phi_personal: T,
    phi_global: T,
    draws: &Draws<T>,
) -> Coords<T> {
    let mut v = *velocity;
    for j in 0..3 {
        let (rp, rg) = draws[j];
        v[j] = v[j]
            + phi_personal * rp * (personal_best[j] - position[j])
            + phi_global * rg * (attractor[j] - position[j]);
    }
    v
}

/// Classic update scaled by the constriction coefficient `chi`.
#[allow(clippy::too_many_arguments)]
pub fn canonical_velocity<T: Scalar>(
    velocity: &Coords<T>,
    position: &Coords<T>,
    personal_best: &Coords<T>,
    attractor: &Coords<T>,
    phi_personal: T,
    phi_global: T,
    chi: T,
    draws: &Draws<T>,
) -> Coords<T> {
    classic_velocity(
        velocity,
        position,
        personal_best,
        attractor,
        phi_personal,
        phi_global,
        draws,
    )
    .map(|v| chi * v)
}

pub fn velocity_update_classic<T: Scalar, R: Rng + ?Sized>(
    p: &Particle<T>,
    global_best: &Coords<T>,
    phi_personal: T,
    phi_global: T,
    rng: &mut R,
) -> Coords<T> {
    let draws = draw(rng);
    classic_velocity(
        &p.velocity,
        &p.position,
        &p.best_position,
        global_best,
        phi_personal,
        phi_global,
        &draws,
    )
}

/// Constriction update towards `attractor`: the global best in the
/// traditional search, the best position of the particle's own kernel type
/// in the modified search.
pub fn velocity_update_canonical<T: Scalar, R: Rng + ?Sized>(
    p: &Particle<T>,
    attractor: &Coords<T>,
    chi: T,
    phi_personal: T,
    phi_global: T,
    rng: &mut R,
) -> Coords<T> {
    let draws = draw(rng);
    canonical_velocity(
        &p.velocity,
        &p.position,
        &p.best_position,
        attractor,
        phi_personal,
        phi_global,
        chi,
        &draws,
    )
}

/// Moves the particle by its velocity and clamps each coordinate into the
/// ranges of its kernel type. A clamped coordinate has its velocity zeroed.
pub fn position_update<T: Scalar>(mut p: Particle<T>, ranges: &ParamRanges<T>) -> Particle<T> {
    let r = ranges.get(p.kind);
    for j in 0..3 {
        let moved = p.position[j] + p.velocity[j];
        let axis = r.axis(j);
        let clamped = axis.clamp(moved);
        if clamped != moved {
            p.velocity[j] = T::zero();
        }
        p.position[j] = clamped;
    }
    p
}
