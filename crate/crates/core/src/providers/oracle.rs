use std::collections::HashMap;

use rand::Rng;
use rand_distr::StandardNormal;

use super::rng::{stream, Purpose};
use super::splat::splat_boxes;
use super::{
    DepthProvider, GeomResult, GeometryProvider, Matcher, MatchResult, NoiseConfig,
    ObjectnessProvider,
};
use crate::error::{Error, Result};
use crate::geometry::{box_keypoints, project_keypoints};
use crate::model::{Box2D, Dims, FrameIndex, Heatmap, Sequence, TrackId};
use crate::simulator::occlusion_fraction;

/// Depth reported where no object covers the pixel.
pub const BACKGROUND_DEPTH: f64 = 1e4;

/// Ground-truth oracles over one sequence. Read-only after construction.
pub struct OracleProviders<'a> {
    seq: &'a Sequence,
    noise: NoiseConfig,
    stride: u32,
    occlusion: HashMap<(FrameIndex, TrackId), f64>,
    tracks: std::collections::BTreeSet<TrackId>,
}

impl<'a> OracleProviders<'a> {
    pub fn new(seq: &'a Sequence, noise: NoiseConfig, stride: u32) -> Result<Self> {
        noise.validate()?;
        if stride == 0 {
            return Err(Error::Config("heatmap stride must be positive".into()));
        }
        let mut occlusion = HashMap::new();
        for f in &seq.frames {
            for a in &f.annotations {
                let frac = occlusion_fraction(f, a.track_id).unwrap_or(0.0);
                occlusion.insert((f.index, a.track_id), frac);
            }
        }
        Ok(Self {
            seq,
            noise,
            stride,
            occlusion,
            tracks: seq.track_ids().into_iter().collect(),
        })
    }

    pub fn noise(&self) -> &NoiseConfig {
        &self.noise
    }

    pub fn stride(&self) -> u32 {
        self.stride
    }

    fn check_frame(&self, frame: FrameIndex) -> Result<()> {
        self.seq
            .frame(frame)
            .map(|_| ())
            .ok_or_else(|| Error::Lookup(format!("frame {frame} not in sequence {}", self.seq.id)))
    }

    fn check_track(&self, track: TrackId) -> Result<()> {
        if self.tracks.contains(&track) {
            Ok(())
        } else {
            Err(Error::Lookup(format!("track {track} not in sequence {}", self.seq.id)))
        }
    }

    fn normal(&self, track: TrackId, frame: FrameIndex, purpose: Purpose) -> f64 {
        stream(self.noise.seed, track.0 as u64, frame as u64, purpose).sample(StandardNormal)
    }
}

impl Matcher for OracleProviders<'_> {
    fn match_target(
        &self,
        source_frame: FrameIndex,
        track: TrackId,
        target_frame: FrameIndex,
    ) -> Result<Option<MatchResult>> {
        self.check_track(track)?;
        self.check_frame(source_frame)?;
        self.check_frame(target_frame)?;
        let Some(gt) = self.seq.annotation(target_frame, track) else {
            return Ok(None);
        };
        let occ = self.occlusion[&(target_frame, track)];
        let p_drop = self.noise.dropout_probability(occ);
        let draw: f64 = stream(self.noise.seed, track.0 as u64, target_frame as u64, Purpose::MatchDropout).gen();
        if draw < p_drop {
            return Ok(None);
        }
        let mut box2d = gt.box2d;
        if self.noise.center_px_sigma > 0.0 {
            let mut rng = stream(self.noise.seed, track.0 as u64, target_frame as u64, Purpose::MatchCenter);
            let du: f64 = rng.sample(StandardNormal);
            let dv: f64 = rng.sample(StandardNormal);
            box2d.cx += du * self.noise.center_px_sigma;
            box2d.cy += dv * self.noise.center_px_sigma;
        }
        Ok(Some(MatchResult {
            box2d,
            mask: gt.mask.clone(),
            confidence: self.noise.confidence(gt.box3d.center().z, occ),
            similarity: None,
        }))
    }
}

impl GeometryProvider for OracleProviders<'_> {
    fn estimate(&self, frame: FrameIndex, track: TrackId, _box2d: &Box2D) -> Result<GeomResult> {
        self.check_track(track)?;
        let gt = self.seq.annotation(frame, track).ok_or_else(|| {
            Error::Lookup(format!("no ground truth for track {track} in frame {frame}"))
        })?;
        let kp = box_keypoints(&gt.box3d);
        let mut px = project_keypoints(&kp, &self.seq.intrinsics, gt.box3d.direction())?;

        // One shared depth factor: the lifted box moves along the viewing
        // rays but keeps its heading.
        if self.noise.depth_rel_sigma > 0.0 {
            let factor = (self.noise.depth_rel_sigma * self.normal(track, frame, Purpose::GeometryDepth)).exp();
            px.depths.iter_mut().for_each(|d| *d *= factor);
        }
        let mut dims = gt.box3d.dims();
        if self.noise.dims_rel_sigma > 0.0 {
            let mut rng = stream(self.noise.seed, track.0 as u64, frame as u64, Purpose::GeometryDims);
            let mut jitter = |v: f64| {
                let n: f64 = rng.sample(StandardNormal);
                v * (self.noise.dims_rel_sigma * n).exp()
            };
            dims = Dims::new(jitter(dims.length), jitter(dims.width), jitter(dims.height))?;
        }
        if self.noise.direction_flip_prob > 0.0 {
            let draw: f64 =
                stream(self.noise.seed, track.0 as u64, frame as u64, Purpose::GeometryDirection).gen();
            if draw < self.noise.direction_flip_prob {
                // A wrong facing call also swaps which end is read as the front.
                std::mem::swap(&mut px.front, &mut px.back);
                px.depths.swap(0, 2);
                px.direction = px.direction.flipped();
            }
        }
        Ok(GeomResult {
            keypoints_px: px,
            dims,
        })
    }
}

impl DepthProvider for OracleProviders<'_> {
    fn depth_at(&self, frame: FrameIndex, u: f64, v: f64) -> Result<f64> {
        let f = self
            .seq
            .frame(frame)
            .ok_or_else(|| Error::Lookup(format!("frame {frame} not in sequence {}", self.seq.id)))?;
        let k = &self.seq.intrinsics;
        if !(u >= 0.0 && v >= 0.0 && u < k.width() as f64 && v < k.height() as f64) {
            return Err(Error::invalid(format!("pixel ({u}, {v}) outside the image")));
        }
        let nearest = f
            .annotations
            .iter()
            .filter(|a| {
                let b = &a.box2d;
                u >= b.left() && u <= b.right() && v >= b.top() && v <= b.bottom()
            })
            .map(|a| a.box3d.center().z)
            .fold(None, |acc: Option<f64>, z| Some(acc.map_or(z, |m| m.min(z))));
        let Some(depth) = nearest else {
            return Ok(BACKGROUND_DEPTH);
        };
        if self.noise.depth_rel_sigma == 0.0 {
            return Ok(depth);
        }
        let key = u.to_bits() ^ v.to_bits().rotate_left(32);
        let n: f64 = stream(self.noise.seed, key, frame as u64, Purpose::DepthPixel).sample(StandardNormal);
        Ok(depth * (self.noise.depth_rel_sigma * n).exp())
    }
}

impl ObjectnessProvider for OracleProviders<'_> {
    fn objectness(&self, frame: FrameIndex) -> Result<Heatmap> {
        let f = self
            .seq
            .frame(frame)
            .ok_or_else(|| Error::Lookup(format!("frame {frame} not in sequence {}", self.seq.id)))?;
        let (w, h) = Heatmap::shape_for(&self.seq.intrinsics, self.stride);
        Ok(splat_boxes(w, h, self.stride, f.annotations.iter().map(|a| &a.box2d)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{lift_keypoints, yaw_from_keypoints};
    use crate::model::normalize_yaw;
    use crate::simulator::{simulate, ObjectSpec, SimConfig};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn car(x: f64, z: f64, heading: f64) -> ObjectSpec {
        ObjectSpec {
            x,
            z,
            heading,
            speed: 0.0,
            turn_rate: 0.0,
            length: 4.2,
            width: 1.8,
            height: 1.5,
        }
    }

    fn scene(objects: Vec<ObjectSpec>) -> Sequence {
        simulate(&SimConfig {
            duration: 4,
            ego_speed: 0.0,
            objects,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn noiseless_match_is_exact() {
        let seq = scene(vec![car(2.0, 20.0, 0.4)]);
        let p = OracleProviders::new(&seq, NoiseConfig::noiseless(), 4).unwrap();
        let m = p.match_target(0, TrackId(0), 2).unwrap().unwrap();
        assert_eq!(m.box2d, seq.annotation(2, TrackId(0)).unwrap().box2d);
        assert_eq!(m.confidence, 1.0);
    }

    #[test]
    fn confidence_follows_formula() {
        let seq = scene(vec![car(2.0, 20.0, 0.4)]);
        let noise = NoiseConfig {
            match_dropout_base: 0.0,
            dropout_occlusion_gain: 0.0,
            center_px_sigma: 0.0,
            ..NoiseConfig::default()
        };
        let p = OracleProviders::new(&seq, noise, 4).unwrap();
        let m = p.match_target(0, TrackId(0), 1).unwrap().unwrap();
        let z = seq.annotation(1, TrackId(0)).unwrap().box3d.center().z;
        assert!((m.confidence - 0.98 * (-z / 120.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn absent_object_and_certain_dropout() {
        let mut seq = scene(vec![car(2.0, 20.0, 0.4)]);
        seq.frames[3].annotations.clear();
        let p = OracleProviders::new(&seq, NoiseConfig::noiseless(), 4).unwrap();
        assert!(p.match_target(0, TrackId(0), 3).unwrap().is_none());
        assert!(matches!(p.match_target(0, TrackId(9), 1), Err(Error::Lookup(_))));
        assert!(matches!(p.match_target(0, TrackId(0), 99), Err(Error::Lookup(_))));

        let always = NoiseConfig {
            match_dropout_base: 1.0,
            ..NoiseConfig::noiseless()
        };
        let p = OracleProviders::new(&seq, always, 4).unwrap();
        for t in 0..3 {
            assert!(p.match_target(0, TrackId(0), t).unwrap().is_none());
        }
    }

    #[test]
    fn occlusion_never_raises_confidence() {
        let noise = NoiseConfig::default();
        let mut last = f64::INFINITY;
        for i in 0..=20 {
            let c = noise.confidence(30.0, i as f64 / 20.0);
            assert!(c <= last);
            last = c;
        }
    }

    #[test]
    fn noiseless_geometry_recovers_yaw() {
        let seq = scene(vec![car(-3.0, 25.0, 2.1), car(4.0, 12.0, -0.7)]);
        let p = OracleProviders::new(&seq, NoiseConfig::noiseless(), 4).unwrap();
        for a in &seq.frames[1].annotations {
            let g = p.estimate(1, a.track_id, &a.box2d).unwrap();
            let kp = lift_keypoints(&g.keypoints_px, &seq.intrinsics).unwrap();
            let yaw = yaw_from_keypoints(&kp, g.keypoints_px.direction).unwrap();
            assert!(normalize_yaw(yaw - a.box3d.yaw()).unwrap().abs() < 1e-9);
            assert_eq!(g.dims, a.box3d.dims());
        }
    }

    #[test]
    fn depth_noise_median_matches_lognormal() {
        let seq = scene(vec![car(0.0, 20.0, 0.4)]);
        let noise = NoiseConfig {
            depth_rel_sigma: 0.1,
            ..NoiseConfig::noiseless()
        };
        let mut errs: Vec<f64> = (0..10_000u64)
            .map(|s| {
                let p = OracleProviders::new(&seq, noise.with_seed(s), 4).unwrap();
                let g = p.estimate(0, TrackId(0), &seq.frames[0].annotations[0].box2d).unwrap();
                let z = seq.frames[0].annotations[0].box3d.center().z;
                (g.keypoints_px.depths[1] - z).abs() / z
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        let median = errs[errs.len() / 2];
        assert!((0.055..=0.08).contains(&median), "median {median}");
    }

    #[test]
    fn direction_flip_turns_yaw_around() {
        // heading +x is perpendicular to the line of sight
        let seq = scene(vec![car(0.0, 20.0, 0.0)]);
        let noise = NoiseConfig {
            direction_flip_prob: 1.0,
            depth_rel_sigma: 0.05,
            ..NoiseConfig::noiseless()
        };
        let p = OracleProviders::new(&seq, noise, 4).unwrap();
        let a = &seq.frames[0].annotations[0];
        let g = p.estimate(0, a.track_id, &a.box2d).unwrap();
        let kp = lift_keypoints(&g.keypoints_px, &seq.intrinsics).unwrap();
        let yaw = yaw_from_keypoints(&kp, g.keypoints_px.direction).unwrap();
        let err = normalize_yaw(yaw - a.box3d.yaw()).unwrap().abs();
        assert!((err - PI).abs() < 1e-6, "yaw error {err}");
    }

    #[test]
    fn depth_map_and_determinism() {
        let seq = scene(vec![car(0.0, 20.0, FRAC_PI_2)]);
        let p = OracleProviders::new(&seq, NoiseConfig::noiseless(), 4).unwrap();
        let a = &seq.frames[0].annotations[0];
        let (u, v) = crate::geometry::project(&a.box3d.center(), &seq.intrinsics).unwrap();
        assert_eq!(p.depth_at(0, u, v).unwrap(), a.box3d.center().z);
        assert_eq!(p.depth_at(0, 1.0, 1.0).unwrap(), BACKGROUND_DEPTH);
        assert!(p.depth_at(0, -1.0, 1.0).is_err());
        assert!(p.depth_at(0, 1.0, 1e6).is_err());

        let noisy = OracleProviders::new(&seq, NoiseConfig::heavy().with_seed(3), 4).unwrap();
        let again = OracleProviders::new(&seq, NoiseConfig::heavy().with_seed(3), 4).unwrap();
        assert_eq!(noisy.depth_at(0, u, v).unwrap(), again.depth_at(0, u, v).unwrap());
        assert_ne!(noisy.depth_at(0, u, v).unwrap(), a.box3d.center().z);
    }

    #[test]
    fn objectness_peaks() {
        let mut seq = scene(vec![car(0.0, 20.0, 0.3), car(1.0, 22.0, 0.3)]);
        let p = OracleProviders::new(&seq, NoiseConfig::noiseless(), 4).unwrap();
        let hm = p.objectness(0).unwrap();
        assert!(hm.values().iter().all(|v| (0.0..=1.0).contains(v)));
        let b = seq.frames[0].annotations[0].box2d;
        let (x, y) = hm.cell_of(b.cx, b.cy);
        assert_eq!(hm.get(x, y), 1.0);

        seq.frames[1].annotations.clear();
        let p = OracleProviders::new(&seq, NoiseConfig::noiseless(), 4).unwrap();
        assert!(p.objectness(1).unwrap().values().iter().all(|&v| v == 0.0));
    }
}
