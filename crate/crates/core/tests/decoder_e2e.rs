use chordsim::decoder::{decode_pipeline, DecoderConfig};
use chordsim::harness::{simulate_capture, SceneSpec, SimConfig};
use chordsim::model::{ArrayGeometry, CarrierPlan, Path, Scene, SceneTag};
use chordsim::Error;

fn scene(epc: Vec<bool>) -> Scene {
    Scene {
        tags: vec![SceneTag {
            epc,
            position_m: [0.3, 2.0, 0.0],
            paths: vec![Path::direct(1.0), Path::reflector([1.2, 3.0, 0.5], 0.4)],
        }],
        ambient_noise_dbm_per_hz: -174.0,
        seed: 7,
    }
}

fn epc() -> Vec<bool> {
    (0..96).map(|i| (i * 7 + 3) % 5 < 2).collect()
}

fn max_channel_error(a: &chordsim::model::ChannelMatrix, b: &chordsim::model::ChannelMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for (ra, rb) in a.h.iter().zip(&b.h) {
        for (x, y) in ra.iter().zip(rb) {
            worst = worst.max((x - y).norm() / y.norm());
        }
    }
    worst
}

#[test]
fn noiseless_fast_path_recovers_epc_and_channel() {
    let plan = CarrierPlan::desk_default();
    let geom = ArrayGeometry::paper_default();
    let spec = SceneSpec { scene: scene(epc()), snr_db: None, leak_db: None, active_antennas: None, active_carriers: None };
    let cap = simulate_capture(&spec, &plan, &geom, 0, 1, &SimConfig::default()).unwrap();
    let out = decode_pipeline(&cap.banks().unwrap(), &plan, &geom, &DecoderConfig::default()).unwrap();
    assert!(out.crc_ok);
    assert_eq!(out.epc_bits, epc());
    assert_eq!(out.rn16_bits, cap.packet.rn16_bits);
    let err = max_channel_error(&out.channel, &cap.channel);
    assert!(err < 0.05, "relative channel error {err}");
}

#[test]
fn decodes_extreme_clock_offsets_with_drift() {
    let plan = CarrierPlan::desk_default();
    let geom = ArrayGeometry::paper_default();
    let spec = SceneSpec { scene: scene(epc()), snr_db: Some(10.0), leak_db: Some(20.0), active_antennas: None, active_carriers: None };
    for (i, a) in [-0.10, 0.10].into_iter().enumerate() {
        let cfg = SimConfig { alpha0_frac: Some(a), drift_frac: 0.025, ..SimConfig::default() };
        let cap = simulate_capture(&spec, &plan, &geom, 0, 10 + i as u64, &cfg).unwrap();
        let out = decode_pipeline(&cap.banks().unwrap(), &plan, &geom, &DecoderConfig::default()).unwrap();
        assert!(out.crc_ok, "alpha0 {a}");
        assert_eq!(out.epc_bits, epc());
        let rel = (out.sync.alpha0_hat_hz - cap.packet.alpha0_hz).abs() / 250e3;
        assert!(rel < 0.02, "alpha0 {a}: estimate off by {rel}");
    }
}

#[test]
fn full_path_matches_fast_path() {
    let plan = CarrierPlan::desk_default();
    let geom = ArrayGeometry::paper_default();
    let spec = SceneSpec {
        scene: scene(epc()),
        snr_db: None,
        leak_db: None,
        active_antennas: Some(vec![0, 1]),
        active_carriers: None,
    };
    let cfg = SimConfig { fast_path: false, ..SimConfig::default() };
    let cap = simulate_capture(&spec, &plan, &geom, 0, 3, &cfg).unwrap();
    let g2 = geom.subset(&[0, 1]).unwrap();
    let out = decode_pipeline(&cap.banks().unwrap(), &plan, &g2, &DecoderConfig::default()).unwrap();
    assert!(out.crc_ok);
    assert_eq!(out.epc_bits, epc());
    let err = max_channel_error(&out.channel, &cap.channel);
    assert!(err < 0.05, "relative channel error {err}");
}

#[test]
fn pure_noise_yields_no_packet() {
    let plan = CarrierPlan::desk_default();
    let geom = ArrayGeometry::paper_default();
    let spec = SceneSpec { scene: scene(epc()), snr_db: Some(-60.0), leak_db: None, active_antennas: None, active_carriers: None };
    let cap = simulate_capture(&spec, &plan, &geom, 0, 5, &SimConfig::default()).unwrap();
    match decode_pipeline(&cap.banks().unwrap(), &plan, &geom, &DecoderConfig::default()) {
        Err(Error::NoPacket { .. }) => {}
        other => panic!("expected NoPacket, got {:?}", other.map(|p| p.crc_ok)),
    }
}
