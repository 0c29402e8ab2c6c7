use edgesplat_core::event::Polarity;
use edgesplat_core::metrics::{ate, ssim, Trajectory};
use edgesplat_core::slam::pipeline_chunks;
use edgesplat_core::{Event, EventStream, Grid, PoseSE3};
use nalgebra::{UnitQuaternion, Vector3};
use proptest::prelude::*;

fn events_strategy() -> impl Strategy<Value = Vec<Event>> {
    prop::collection::vec((0u64..10_000, 0u16..8, 0u16..6, any::<bool>()), 0..200).prop_map(|raw| {
        let mut evs: Vec<Event> = raw
            .into_iter()
            .map(|(t, x, y, p)| Event::new(t, x, y, if p { Polarity::Positive } else { Polarity::Negative }))
            .collect();
        evs.sort_by_key(Event::sort_key);
        evs
    })
}

fn stream(events: Vec<Event>) -> EventStream {
    EventStream::with_span(8, 6, events, 0, 10_000).unwrap()
}

fn flipped(events: &[Event]) -> Vec<Event> {
    let mut out: Vec<Event> = events.iter().map(|e| Event::new(e.t, e.x, e.y, e.polarity.flipped())).collect();
    out.sort_by_key(Event::sort_key);
    out
}

proptest! {
    #[test]
    fn accumulation_splits_additively(events in events_strategy(), cut in 1u64..9_999) {
        let s = stream(events);
        let whole = s.accumulate(0, 10_000, 0.2).unwrap();
        let a = s.accumulate(0, cut, 0.2).unwrap();
        let b = s.accumulate(cut, 10_000 - cut, 0.2).unwrap();
        for (w, (x, y)) in whole.counts().iter().zip(a.counts().iter().zip(b.counts().iter())) {
            prop_assert_eq!(*w, x + y);
        }
    }

    #[test]
    fn flipping_polarity_negates_the_map(events in events_strategy()) {
        let pos = stream(events.clone()).accumulate(0, 10_000, 0.3).unwrap();
        let neg = stream(flipped(&events)).accumulate(0, 10_000, 0.3).unwrap();
        for (a, b) in pos.counts().iter().zip(neg.counts().iter()) {
            prop_assert_eq!(*a, -b);
        }
    }

    #[test]
    fn chunks_partition_the_stream(events in events_strategy(), duration in 500u64..6_000) {
        let s = stream(events);
        let chunks = pipeline_chunks(&s, duration).unwrap();
        prop_assert_eq!(chunks.iter().map(|c| c.events.len()).sum::<usize>(), s.len());
        prop_assert_eq!(chunks[0].t_start, 0);
        prop_assert_eq!(chunks.last().unwrap().t_end, 10_000);
        for w in chunks.windows(2) {
            prop_assert_eq!(w[0].t_end, w[1].t_start);
        }
        for c in &chunks {
            prop_assert!(c.events.iter().all(|e| e.t >= c.t_start && e.t < c.t_end));
        }
    }

    #[test]
    fn ssim_is_symmetric_and_bounded(a in prop::collection::vec(-1.0f64..1.0, 48), b in prop::collection::vec(-1.0f64..1.0, 48)) {
        let ga = Grid::from_vec(8, 6, a).unwrap();
        let gb = Grid::from_vec(8, 6, b).unwrap();
        let ab = ssim(&ga, &gb).unwrap();
        let ba = ssim(&gb, &ga).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&ab));
        prop_assert!((ssim(&ga, &ga).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ate_is_invariant_to_rigid_motion(
        roll in -3.0f64..3.0, pitch in -1.5f64..1.5, yaw in -3.0f64..3.0,
        tx in -10.0f64..10.0, ty in -10.0f64..10.0, tz in -10.0f64..10.0,
    ) {
        let samples: Vec<(u64, PoseSE3)> = (0..12u64)
            .map(|i| {
                let s = i as f64 * 0.3;
                (i * 100, PoseSE3::from_translation(Vector3::new(s.cos(), s.sin(), 0.2 * s)))
            })
            .collect();
        let gt = Trajectory::new(samples).unwrap();
        let noisy = Trajectory::new(
            gt.samples().iter().enumerate()
                .map(|(i, (t, p))| (*t, PoseSE3::from_translation(p.translation + Vector3::new(0.01 * (i % 3) as f64, -0.02 * (i % 2) as f64, 0.0))))
                .collect(),
        ).unwrap();
        let motion = PoseSE3::new(UnitQuaternion::from_euler_angles(roll, pitch, yaw), Vector3::new(tx, ty, tz));
        let base = ate(&noisy, &gt, 0, false).unwrap().rmse;
        let moved = ate(&noisy.transformed(&motion), &gt, 0, false).unwrap().rmse;
        prop_assert!((base - moved).abs() < 1e-9, "{} vs {}", base, moved);
    }
}
