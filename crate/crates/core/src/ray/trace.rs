//! Maximal generalized bicharacteristics: interior transport alternating
//! with boundary events under a continuation policy.

use crate::error::{GeomError, TraceError};
use crate::geometry::{BoundaryPoint, Domain};
use crate::material::{Material, WaveMode};
use crate::ray::glancing::{glancing_stratum, glide_boundary, GlancingStratum, GlideStop};
use crate::ray::{
    classify_boundary, mode_convert, reflect_hyperbolic, BoundaryClass, ConvertOutcome,
    PhasePoint, TOL_Q,
};
use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentType {
    InteriorLine,
    BoundaryGeodesic,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RaySegment {
    pub start: PhasePoint,
    pub end: PhasePoint,
    pub mode: WaveMode,
    pub kind: SegmentType,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// The continuation would be elliptic: no propagating branch.
    Elliptic,
    TimeLimit,
    /// Glancing stratum not resolved within the smoothness order.
    UnresolvedGlancing,
    /// The policy offered no admissible continuation.
    NoContinuation,
    EventCap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Reflect,
    ConvertTL,
    ConvertLT,
    DiffractiveTouch,
    GlideStart,
    GlideEnd,
    Stop(StopReason),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryEvent {
    pub point: BoundaryPoint,
    pub t: f64,
    /// Tangential frequency (projection of eta onto the tangent plane).
    pub eta_prime: Vec3,
    pub kind: EventKind,
    pub mode_in: WaveMode,
    /// Per-branch classification at the event.
    pub class_t: BoundaryClass,
    pub class_l: BoundaryClass,
    pub stratum: Option<GlancingStratum>,
}

/// Ordered segments plus boundary events of a generalized bicharacteristic.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Ray {
    pub segments: Vec<RaySegment>,
    pub events: Vec<BoundaryEvent>,
}

impl Ray {
    /// Elapsed time |t(b) - t(a)| over the whole ray.
    pub fn life_length(&self) -> f64 {
        match (self.segments.first(), self.segments.last()) {
            (Some(a), Some(b)) => (b.end.t - a.start.t).abs(),
            _ => 0.0,
        }
    }

    /// Continuity defect between consecutive segments (max position gap).
    pub fn continuity_defect(&self) -> f64 {
        self.segments
            .windows(2)
            .map(|w| (w[1].start.y - w[0].end.y).norm().max((w[1].start.t - w[0].end.t).abs()))
            .fold(0.0, f64::max)
    }

    /// Flat event rows: t, position, kind, mode, |eta'|.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,x,y,z,kind,mode_in,eta_prime_norm,class_t,class_l\n");
        for e in &self.events {
            s.push_str(&format!(
                "{},{},{},{},{:?},{},{},{:?},{:?}\n",
                e.t,
                e.point.y.x,
                e.point.y.y,
                e.point.y.z,
                e.kind,
                e.mode_in.tag(),
                e.eta_prime.norm(),
                e.class_t,
                e.class_l,
            ));
        }
        s
    }
}

/// What to do at a hyperbolic boundary event.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Continuation {
    Reflect,
    Convert(WaveMode),
    Stop(StopReason),
}

/// Everything a policy may inspect at a boundary event.
#[derive(Clone, Debug)]
pub struct BoundaryContext {
    pub point: BoundaryPoint,
    pub t: f64,
    pub tau: f64,
    pub eta_in: Vec3,
    pub eta_prime: Vec3,
    pub mode_in: WaveMode,
    pub class_own: BoundaryClass,
    pub class_other: BoundaryClass,
}

pub trait ContinuationPolicy {
    fn choose(&self, ctx: &BoundaryContext, material: &Material) -> Continuation;
}

/// Default policy: same-mode specular reflection at every hyperbolic event.
pub struct Specular;

impl ContinuationPolicy for Specular {
    fn choose(&self, _ctx: &BoundaryContext, _material: &Material) -> Continuation {
        Continuation::Reflect
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TraceLimits {
    pub t_max: f64,
    pub max_events: usize,
}

impl TraceLimits {
    pub fn new(t_max: f64) -> Self {
        TraceLimits {
            t_max,
            max_events: 10_000,
        }
    }
}

/// Straight interior transport from `pp` to the first boundary hit.
pub fn advance_interior(
    pp: &PhasePoint,
    domain: &Domain,
    material: &Material,
) -> Result<(RaySegment, BoundaryPoint), TraceError> {
    let c = material.speed(pp.mode);
    let dir = pp.direction();
    let (bp, s) = domain.first_boundary_hit(pp.y, dir)?;
    let end = PhasePoint {
        t: pp.t + s / c,
        y: bp.y,
        tau: pp.tau,
        eta: pp.eta,
        mode: pp.mode,
    };
    Ok((
        RaySegment {
            start: *pp,
            end,
            mode: pp.mode,
            kind: SegmentType::InteriorLine,
        },
        bp,
    ))
}

/// Traces the maximal ray from `initial` under `policy` until `t_max`.
///
/// Hyperbolic events follow the policy; glancing events follow the
/// generalized flow (gliding along boundary geodesics on convex patches,
/// straight continuation through diffractive touches). Elliptic
/// continuations terminate the ray cleanly with a Stop event.
pub fn trace_ray(
    initial: PhasePoint,
    domain: &Domain,
    material: &Material,
    limits: TraceLimits,
    policy: &dyn ContinuationPolicy,
) -> Result<Ray, TraceError> {
    initial.check_on_shell(material)?;
    let mut ray = Ray::default();
    let mut state = initial;
    loop {
        if ray.events.len() >= limits.max_events {
            push_stop(&mut ray, &state, domain, material, StopReason::EventCap);
            return Ok(ray);
        }
        // Interior segment, truncated at t_max.
        let (mut seg, bp) = match advance_interior(&state, domain, material) {
            Ok(x) => x,
            Err(TraceError::Geometry(GeomError::NoHit)) => {
                // Tangential departure from the boundary can fail to re-enter
                // within tolerance; treat as a grazing exit.
                push_stop(&mut ray, &state, domain, material, StopReason::NoContinuation);
                return Ok(ray);
            }
            Err(e) => return Err(e),
        };
        if seg.end.t >= limits.t_max {
            let c = material.speed(state.mode);
            let dt = limits.t_max - state.t;
            seg.end = PhasePoint {
                t: limits.t_max,
                y: state.y + state.direction() * (dt * c),
                ..state
            };
            ray.segments.push(seg);
            push_stop_at(&mut ray, ray.segments.last().unwrap().end, domain, material, StopReason::TimeLimit);
            return Ok(ray);
        }
        ray.segments.push(seg.clone());
        state = seg.end;

        // Classify the arrival for both branches.
        let eta_prime = state.eta.reject_from_unit(bp.n);
        let class_own = classify_boundary(
            state.tau,
            eta_prime.norm2(),
            material.speed(state.mode),
            TOL_Q,
        );
        let class_other = classify_boundary(
            state.tau,
            eta_prime.norm2(),
            material.speed(state.mode.other()),
            TOL_Q,
        );
        let (class_t, class_l) = per_branch(state.mode, class_own, class_other);

        match class_own {
            BoundaryClass::Elliptic => {
                // Cannot happen for an arriving interior ray; defensive stop.
                push_stop(&mut ray, &state, domain, material, StopReason::Elliptic);
                return Ok(ray);
            }
            BoundaryClass::Glancing => {
                let stratum =
                    match glancing_stratum(domain, &bp, state.tau, eta_prime, material.speed(state.mode)) {
                        Ok(s) => s,
                        Err(GeomError::ExceedsSmoothness(_)) => {
                            push_stop(&mut ray, &state, domain, material, StopReason::UnresolvedGlancing);
                            return Ok(ray);
                        }
                        Err(e) => return Err(TraceError::Geometry(e)),
                    };
                match stratum {
                    GlancingStratum::Diffractive => {
                        ray.events.push(BoundaryEvent {
                            point: bp,
                            t: state.t,
                            eta_prime,
                            kind: EventKind::DiffractiveTouch,
                            mode_in: state.mode,
                            class_t,
                            class_l,
                            stratum: Some(stratum),
                        });
                        // Straight continuation through the touch point.
                        continue;
                    }
                    GlancingStratum::Gliding | GlancingStratum::HigherOrder(_) => {
                        ray.events.push(BoundaryEvent {
                            point: bp,
                            t: state.t,
                            eta_prime,
                            kind: EventKind::GlideStart,
                            mode_in: state.mode,
                            class_t,
                            class_l,
                            stratum: Some(stratum),
                        });
                        let c = material.speed(state.mode);
                        let budget = (limits.t_max - state.t) * c;
                        let out = glide_boundary(
                            domain,
                            &bp,
                            eta_prime,
                            state.mode,
                            material,
                            budget,
                        )?;
                        let end = PhasePoint {
                            t: state.t + out.elapsed_time,
                            y: out.end.y,
                            tau: state.tau,
                            eta: out.direction * (state.tau / c),
                            mode: state.mode,
                        };
                        ray.segments.push(RaySegment {
                            start: state,
                            end,
                            mode: state.mode,
                            kind: SegmentType::BoundaryGeodesic,
                        });
                        let ep_end = end.eta.reject_from_unit(out.end.n);
                        ray.events.push(BoundaryEvent {
                            point: out.end,
                            t: end.t,
                            eta_prime: ep_end,
                            kind: EventKind::GlideEnd,
                            mode_in: state.mode,
                            class_t,
                            class_l,
                            stratum: Some(stratum),
                        });
                        state = end;
                        if out.stop == GlideStop::Budget {
                            push_stop(&mut ray, &state, domain, material, StopReason::TimeLimit);
                            return Ok(ray);
                        }
                        // Stratum changed: leave tangentially, straight.
                        continue;
                    }
                }
            }
            BoundaryClass::Hyperbolic => {
                let ctx = BoundaryContext {
                    point: bp,
                    t: state.t,
                    tau: state.tau,
                    eta_in: state.eta,
                    eta_prime,
                    mode_in: state.mode,
                    class_own,
                    class_other,
                };
                match policy.choose(&ctx, material) {
                    Continuation::Reflect => {
                        let eta_out =
                            reflect_hyperbolic(&bp, state.tau, state.eta, material.speed(state.mode))?;
                        ray.events.push(BoundaryEvent {
                            point: bp,
                            t: state.t,
                            eta_prime,
                            kind: EventKind::Reflect,
                            mode_in: state.mode,
                            class_t,
                            class_l,
                            stratum: None,
                        });
                        state.eta = eta_out;
                    }
                    Continuation::Convert(target) => {
                        debug_assert_eq!(target, state.mode.other());
                        match mode_convert(&bp, state.tau, state.eta, state.mode, material)? {
                            ConvertOutcome::Converted { eta_out, .. } => {
                                let kind = match state.mode {
                                    WaveMode::Transversal => EventKind::ConvertTL,
                                    WaveMode::Longitudinal => EventKind::ConvertLT,
                                };
                                ray.events.push(BoundaryEvent {
                                    point: bp,
                                    t: state.t,
                                    eta_prime,
                                    kind,
                                    mode_in: state.mode,
                                    class_t,
                                    class_l,
                                    stratum: None,
                                });
                                state.eta = eta_out;
                                state.mode = target;
                            }
                            ConvertOutcome::Impossible { .. } => {
                                push_stop(&mut ray, &state, domain, material, StopReason::Elliptic);
                                return Ok(ray);
                            }
                        }
                    }
                    Continuation::Stop(reason) => {
                        push_stop(&mut ray, &state, domain, material, reason);
                        return Ok(ray);
                    }
                }
            }
        }
    }
}

fn per_branch(
    mode: WaveMode,
    class_own: BoundaryClass,
    class_other: BoundaryClass,
) -> (BoundaryClass, BoundaryClass) {
    match mode {
        WaveMode::Transversal => (class_own, class_other),
        WaveMode::Longitudinal => (class_other, class_own),
    }
}

fn push_stop(
    ray: &mut Ray,
    state: &PhasePoint,
    domain: &Domain,
    material: &Material,
    reason: StopReason,
) {
    push_stop_at(ray, *state, domain, material, reason);
}

fn push_stop_at(
    ray: &mut Ray,
    state: PhasePoint,
    domain: &Domain,
    material: &Material,
    reason: StopReason,
) {
    let on_surface = domain.phi(state.y).abs() <= 10.0 * domain.tol.surface;
    let n = if on_surface {
        domain.normal(state.y)
    } else {
        state.direction()
    };
    let eta_prime = if on_surface {
        state.eta.reject_from_unit(n)
    } else {
        state.eta
    };
    let c_own = material.speed(state.mode);
    let c_oth = material.speed(state.mode.other());
    let class_own = classify_boundary(state.tau, eta_prime.norm2(), c_own, TOL_Q);
    let class_other = classify_boundary(state.tau, eta_prime.norm2(), c_oth, TOL_Q);
    let (class_t, class_l) = per_branch(state.mode, class_own, class_other);
    ray.events.push(BoundaryEvent {
        point: BoundaryPoint { y: state.y, n },
        t: state.t,
        eta_prime,
        kind: EventKind::Stop(reason),
        mode_in: state.mode,
        class_t,
        class_l,
        stratum: None,
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Surface;
    use crate::vec3::vec3;

    fn ball() -> Domain {
        Domain::new(Surface::Ball { radius: 1.0 }).unwrap()
    }

    fn mat() -> Material {
        Material::new(2.0, 1.0, 0.5, 1.0, Vec3::EX).unwrap()
    }

    #[test]
    fn diameter_bounce() {
        // Normal-incidence billiard: reflections at (+-1, 0, 0) every two
        // time units after the first radius.
        let d = ball();
        let m = mat();
        let pp = PhasePoint::from_direction(0.0, Vec3::ZERO, Vec3::EX, 1.0, WaveMode::Transversal, &m);
        let ray = trace_ray(pp, &d, &m, TraceLimits::new(6.0), &Specular).unwrap();
        let reflects: Vec<_> = ray
            .events
            .iter()
            .filter(|e| e.kind == EventKind::Reflect)
            .collect();
        assert_eq!(reflects.len(), 3);
        assert!((reflects[0].t - 1.0).abs() < 1e-9);
        assert!((reflects[0].point.y - Vec3::EX).norm() < 1e-9);
        assert!((reflects[1].t - 3.0).abs() < 1e-9);
        assert!((reflects[1].point.y + Vec3::EX).norm() < 1e-9);
        assert!((reflects[2].t - 5.0).abs() < 1e-9);
        assert_eq!(ray.segments.len(), 4);
        assert!((ray.life_length() - 6.0).abs() < 1e-9);
        assert!(ray.continuity_defect() < 1e-12);
    }

    #[test]
    fn inscribed_triangle_orbit() {
        // Chord at 60 degrees from the tangent covers an inscribed
        // equilateral triangle; per-bounce chord length sqrt(3).
        let d = ball();
        let m = mat();
        let start = vec3(0.0, -1.0, 0.0);
        let dir = vec3(0.5 * 3.0f64.sqrt(), 0.5, 0.0);
        let pp = PhasePoint::from_direction(0.0, start + dir * 1e-9, dir, 1.0, WaveMode::Transversal, &m);
        let ray = trace_ray(pp, &d, &m, TraceLimits::new(3.0 * 3.0f64.sqrt() * 0.99), &Specular).unwrap();
        for seg in &ray.segments[..3] {
            let chord = (seg.end.y - seg.start.y).norm();
            assert!((chord - 3.0f64.sqrt()).abs() < 1e-6, "chord {chord}");
        }
        // Period 3: the third bounce returns to the start.
        assert!((ray.segments[2].end.y - vec3(0.0, -1.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn time_reversal_retraces_path() {
        let d = ball();
        let m = mat();
        let dir = vec3(0.3, 0.9, 0.2).normalize();
        let pp = PhasePoint::from_direction(0.0, vec3(0.1, -0.2, 0.05), dir, 1.0, WaveMode::Transversal, &m);
        let fwd = trace_ray(pp, &d, &m, TraceLimits::new(5.0), &Specular).unwrap();
        let end = fwd.segments.last().unwrap().end;
        let back = PhasePoint {
            t: 0.0,
            y: end.y,
            tau: end.tau,
            eta: -end.eta,
            mode: end.mode,
        };
        let bwd = trace_ray(back, &d, &m, TraceLimits::new(5.0), &Specular).unwrap();
        let bend = bwd.segments.last().unwrap().end;
        assert!((bend.y - pp.y).norm() < 1e-7, "gap {:.3e}", (bend.y - pp.y).norm());
        // Events in reverse order at mirrored times.
        let fw_t: Vec<f64> = fwd.events.iter().filter(|e| e.kind == EventKind::Reflect).map(|e| e.t).collect();
        let bw_t: Vec<f64> = bwd.events.iter().filter(|e| e.kind == EventKind::Reflect).map(|e| e.t).collect();
        assert_eq!(fw_t.len(), bw_t.len());
        for (tf, tb) in fw_t.iter().zip(bw_t.iter().rev()) {
            assert!((tf + tb - 5.0).abs() < 1e-7);
        }
    }

    #[test]
    fn glancing_seed_traces_equator_geodesic() {
        // A glancing start on the equator of the ball produces a
        // boundary-geodesic segment along the equator.
        let d = ball();
        let m = mat();
        let y0 = vec3(0.0, 1.0, 0.0);
        let pp = PhasePoint::from_direction(0.0, y0 - Vec3::EY * 1e-13, Vec3::EX, 1.0, WaveMode::Transversal, &m);
        // Start exactly on the boundary moving tangentially: first hit is
        // immediate and glancing.
        let ray = trace_ray(pp, &d, &m, TraceLimits::new(2.0), &Specular).unwrap();
        assert!(ray
            .segments
            .iter()
            .any(|s| s.kind == SegmentType::BoundaryGeodesic));
        let geo = ray
            .segments
            .iter()
            .find(|s| s.kind == SegmentType::BoundaryGeodesic)
            .unwrap();
        assert!(geo.end.y.x.abs() < 1e-6);
        assert!((geo.end.y.norm() - 1.0).abs() < 1e-8);
        assert!(ray
            .events
            .iter()
            .any(|e| e.kind == EventKind::GlideStart && e.stratum == Some(GlancingStratum::Gliding)));
    }

    #[test]
    fn characteristic_relation_at_every_endpoint() {
        let d = ball();
        let m = mat();
        let dir = vec3(0.3, 0.9, 0.2).normalize();
        let pp = PhasePoint::from_direction(0.0, vec3(0.1, -0.2, 0.05), dir, 1.3, WaveMode::Longitudinal, &m);
        let ray = trace_ray(pp, &d, &m, TraceLimits::new(7.0), &Specular).unwrap();
        assert!(ray.segments.len() > 3);
        for seg in &ray.segments {
            assert!(seg.start.characteristic_residual(&m) < 1e-10);
            assert!(seg.end.characteristic_residual(&m) < 1e-10);
        }
        // Snell invariant at every reflection: tangential part conserved.
        for (i, e) in ray.events.iter().enumerate() {
            if e.kind != EventKind::Reflect {
                continue;
            }
            let before = ray.segments[i].end.eta.reject_from_unit(e.point.n);
            let after = ray.segments[i + 1].start.eta.reject_from_unit(e.point.n);
            assert!((before - after).norm() < 1e-12 * before.norm().max(1.0));
        }
    }
}
