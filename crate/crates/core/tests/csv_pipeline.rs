use ibob_core::fom::evaluate;
use ibob_core::measurement::{moving_average, parse_pl_csv, parse_pl_csv_with, write_pl_csv, MeasurementSet};
use ibob_core::{Error, FomParams, Frequency, PathLossCurve, Scenario, Source};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn band() -> Frequency {
    Frequency::new(434e6).unwrap()
}

/// Distances on a 1 mm grid starting at 0, losses anywhere in [0, 150) dB.
fn random_curve(rng: &mut impl Rng, n: usize, scenario: Scenario) -> PathLossCurve {
    let mut mm = 0u32;
    let samples = (0..n)
        .map(|i| {
            if i > 0 {
                mm += rng.gen_range(1..40);
            }
            (mm as f64 / 1000.0, rng.gen_range(0.0..150.0))
        })
        .collect();
    PathLossCurve::new(band(), scenario, Source::Measured, samples).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Half a unit in the sixth significant digit, the most rounding to six
/// digits can move a value.
const SIX_DIGIT_REL: f64 = 5e-6;

fn at_csv_precision(c: &PathLossCurve) -> PathLossCurve {
    let snap = |v: f64| format!("{v:.5e}").parse::<f64>().unwrap();
    let s = c.samples().iter().map(|&(d, l)| (d, snap(l))).collect();
    PathLossCurve::new(c.band(), c.scenario(), c.source(), s).unwrap()
}

#[test]
fn random_curves_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let n = rng.gen_range(1..60);
        let raw = random_curve(&mut rng, n, Scenario::InBody);
        // Identity on curves the format can carry.
        let c = at_csv_precision(&raw);
        let text = write_pl_csv(&c);
        assert_eq!(parse_pl_csv(&text, band(), Scenario::InBody).unwrap(), c);
        // Arbitrary values come back rounded, and the result is a fixed point.
        let text = write_pl_csv(&raw);
        let back = parse_pl_csv(&text, band(), Scenario::InBody).unwrap();
        for (a, b) in raw.samples().iter().zip(back.samples()) {
            assert_eq!(a.0, b.0);
            assert!(rel(a.1, b.1) <= SIX_DIGIT_REL, "{a:?} {b:?}");
        }
        assert_eq!(write_pl_csv(&back), text);
    }
}

#[test]
fn thousand_sample_curve_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let c = random_curve(&mut rng, 1000, Scenario::FreeSpace);
    let back = parse_pl_csv(&write_pl_csv(&c), band(), Scenario::FreeSpace).unwrap();
    let worst = c
        .samples()
        .iter()
        .zip(back.samples())
        .map(|(a, b)| rel(a.1, b.1))
        .fold(0.0, f64::max);
    eprintln!("worst relative loss error after a round trip: {worst:.2e}");
    assert!(worst <= SIX_DIGIT_REL, "{worst}");
}

#[test]
fn worked_file_examples() {
    let text = "distance_m,loss_db\n0,40\n0.1,45\n0.2,52\n";
    let c = parse_pl_csv(text.as_bytes(), band(), Scenario::InBody).unwrap();
    assert_eq!(c.samples(), [(0.0, 40.0), (0.1, 45.0), (0.2, 52.0)]);
    assert_eq!(c.source(), Source::Measured);
    assert_eq!(write_pl_csv(&c), text.as_bytes());

    let bad = "distance_m,loss_db\n0,40\n0.05,41\n0.02,43\n";
    assert_eq!(
        parse_pl_csv(bad.as_bytes(), band(), Scenario::InBody),
        Err(Error::Monotonicity {
            row: 4,
            distance_m: 0.02
        })
    );
    assert_eq!(
        parse_pl_csv(b"distance_m,loss_db\n", band(), Scenario::InBody),
        Err(Error::EmptyData)
    );
    assert!(matches!(
        parse_pl_csv(b"0,40\n", band(), Scenario::InBody),
        Err(Error::Format { line: 1, .. })
    ));
    assert!(matches!(
        parse_pl_csv(b"distance_m,loss_db\n0,40\n0.1,NaN\n", band(), Scenario::InBody),
        Err(Error::Value { row: 3, .. })
    ));
    assert!(matches!(
        parse_pl_csv(b"distance_m,loss_db\n0,inf\n", band(), Scenario::InBody),
        Err(Error::Value { row: 2, .. })
    ));
    let crlf = parse_pl_csv(b"distance_m,loss_db\r\n0,40\r\n0.1,45\r\n", band(), Scenario::InBody).unwrap();
    assert_eq!(crlf.len(), 2);

    let one = PathLossCurve::new(band(), Scenario::InBody, Source::Measured, vec![(0.0, 12.5)]).unwrap();
    assert_eq!(write_pl_csv(&one), b"distance_m,loss_db\n0,12.5\n");
    let empty = PathLossCurve::new(band(), Scenario::InBody, Source::Measured, vec![]).unwrap();
    let header_only = write_pl_csv(&empty);
    assert_eq!(header_only, b"distance_m,loss_db\n");
    assert_eq!(
        parse_pl_csv(&header_only, band(), Scenario::InBody),
        Err(Error::EmptyData)
    );
}

#[test]
fn signal_levels_need_negation() {
    let text = b"distance_m,loss_db\n0,-40\n0.1,-45\n";
    assert!(matches!(
        parse_pl_csv(text, band(), Scenario::InBody),
        Err(Error::Value { row: 2, .. })
    ));
    let c = parse_pl_csv_with(text, band(), Scenario::InBody, true).unwrap();
    assert_eq!(c.samples(), [(0.0, 40.0), (0.1, 45.0)]);
}

#[test]
fn moving_average_rules() {
    let c = PathLossCurve::new(
        band(),
        Scenario::InBody,
        Source::Measured,
        vec![(0.0, 40.0), (0.1, 50.0), (0.2, 60.0)],
    )
    .unwrap();
    let m = moving_average(&c, 3).unwrap();
    assert_eq!(m.samples(), [(0.0, 45.0), (0.1, 50.0), (0.2, 55.0)]);
    assert_eq!(moving_average(&c, 1).unwrap(), c);
    assert!(matches!(moving_average(&c, 2), Err(Error::Argument(_))));
    assert!(matches!(moving_average(&c, 5), Err(Error::Argument(_))));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let n: usize = rng.gen_range(1..40);
        let level = rng.gen_range(0.0..150.0);
        let flat = PathLossCurve::new(
            band(),
            Scenario::InBody,
            Source::Measured,
            (0..n).map(|i| (i as f64 * 0.01, level)).collect(),
        )
        .unwrap();
        let w = 2 * rng.gen_range(0..n.div_ceil(2)) + 1;
        assert_eq!(moving_average(&flat, w).unwrap(), flat);

        let noisy = random_curve(&mut rng, n, Scenario::InBody);
        let (lo, hi) = noisy
            .samples()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s.1), hi.max(s.1))
            });
        let m = moving_average(&noisy, w).unwrap();
        for (a, b) in noisy.samples().iter().zip(m.samples()) {
            assert_eq!(a.0, b.0);
            assert!(b.1 >= lo && b.1 <= hi);
        }
    }
}

#[test]
fn measured_and_simulated_pairs_give_identical_reports() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let n = rng.gen_range(2..30);
        let make = |rng: &mut ChaCha8Rng, sc| at_csv_precision(&random_curve(rng, n, sc)).relabel(Source::Simulated);
        let body = make(&mut rng, Scenario::InBody);
        let air = make(&mut rng, Scenario::FreeSpace);
        let x = body.samples().last().unwrap().0.min(air.samples().last().unwrap().0) * rng.gen_range(0.0..=1.0);
        let p = FomParams {
            eval_distance_x_m: x,
            ..FomParams::default()
        };
        let simulated = evaluate(&body, &air, &p).unwrap();
        let set = MeasurementSet::parse(&write_pl_csv(&body), &write_pl_csv(&air), band(), false).unwrap();
        assert_eq!(set.body_curve().source(), Source::Measured);
        let measured = evaluate(set.body_curve(), set.air_curve(), &p).unwrap();
        for (a, b) in [
            (simulated.ll_x_db, measured.ll_x_db),
            (simulated.delta_pl_body_db, measured.delta_pl_body_db),
            (simulated.fom_db, measured.fom_db),
            (simulated.weighted_fom_db, measured.weighted_fom_db),
        ] {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn measurement_sets_check_pairing() {
    let body = b"distance_m,loss_db\n0,40\n0.1,45\n";
    let late = b"distance_m,loss_db\n0.05,40\n0.1,45\n";
    assert!(MeasurementSet::parse(body, body, band(), false).is_ok());
    assert!(matches!(
        MeasurementSet::parse(body, late, band(), false),
        Err(Error::Curve(_))
    ));
    let s = MeasurementSet::parse(body, body, band(), false)
        .unwrap()
        .smoothed(1)
        .unwrap();
    assert_eq!(s.band(), band());
}
