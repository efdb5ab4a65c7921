use super::*;
use crate::inject::inject_trojan;
use crate::netlist::parse_netlist;

const CS_AMP: &str = include_str!("../../../../fixtures/hosts/cs_amp.sp");

fn spec() -> CircuitSpec {
    CircuitSpec::new(0.6, 1.2).unwrap()
}

#[test]
fn minimal_table() {
    let log = parse_log("vin v(out)\n0 1\n0.1 1.1\n0.2 1.2\n").unwrap();
    assert_eq!(log.len(), 3);
    assert_eq!(log.node_voltages.len(), 1);
    assert_eq!(log.output_node, "out");
}

#[test]
fn node_and_device_keys() {
    let log = parse_log("vin v(37) i(M5)\n0 1 1e-6\n0.05 1 2e-6\n").unwrap();
    assert!(log.node_voltages.contains_key("37"));
    assert!(log.device_currents.contains_key("M5"));
}

#[test]
fn malformed_inputs() {
    assert_eq!(
        parse_log("vin v(out)\n0 1\n0.1\n").unwrap_err(),
        SimlogError::RaggedRow { row: 1, expected: 2, found: 1 }
    );
    assert_eq!(
        parse_log("vin v(out)\n0 1\n0 1\n").unwrap_err(),
        SimlogError::NonMonotoneSweep { row: 1 }
    );
    assert!(matches!(parse_log("x v(out)\n0 1\n1 1\n"), Err(SimlogError::HeaderMismatch(_))));
    assert!(matches!(parse_log("vin w(out)\n0 1\n1 1\n"), Err(SimlogError::HeaderMismatch(_))));
    assert!(matches!(parse_log("vin v(out)\n0 1\n1 nan\n"), Err(SimlogError::InvalidNumber { .. })));
    assert_eq!(parse_log("vin v(out)\n0 1\n").unwrap_err(), SimlogError::TooFewSamples(1));
}

#[test]
fn output_comment_wins() {
    let log = parse_log("* output b\nvin v(a) v(b)\n0 1 2\n1 1 2\n").unwrap();
    assert_eq!(log.output_node, "b");
}

#[test]
fn sci6_format() {
    assert_eq!(sci6(1.234567), "1.23457e+00");
    assert_eq!(sci6(-2.5e-5), "-2.50000e-05");
    assert_eq!(sci6(0.0), "0.00000e+00");
    assert_eq!(sci6(1e100), "1.00000e+100");
}

#[test]
fn write_column_order() {
    let mut nodes = BTreeMap::new();
    for name in ["n9", "a", "out", "b2"] {
        nodes.insert(name.to_string(), vec![0.0, 1.0]);
    }
    let mut devs = BTreeMap::new();
    devs.insert("M2".into(), vec![1e-6, 1e-6]);
    devs.insert("M10".into(), vec![1e-6, 1e-6]);
    let log = SimulationLog {
        inputs: vec![0.0, 1.0],
        node_voltages: nodes,
        device_currents: devs,
        output_node: "out".into(),
    };
    let text = write_log(&log);
    let header = text.lines().nth(1).unwrap();
    let mut expected_nodes = vec!["n9", "a", "out", "b2"];
    expected_nodes.sort();
    let mut expected = vec!["vin".to_string()];
    expected.extend(expected_nodes.iter().map(|n| format!("v({n})")));
    let mut d = vec!["M2", "M10"];
    d.sort();
    expected.extend(d.iter().map(|n| format!("i({n})")));
    assert_eq!(header, expected.join(" "));
    assert_eq!(parse_log(&text).unwrap(), log);
}

#[test]
fn only_output_column() {
    let log = SimulationLog {
        inputs: vec![0.0, 1.0],
        node_voltages: [("out".to_string(), vec![0.5, 0.6])].into(),
        device_currents: BTreeMap::new(),
        output_node: "out".into(),
    };
    assert_eq!(write_log(&log).lines().nth(1), Some("vin v(out)"));
}

#[test]
fn clean_log_stays_in_spec() {
    let n = parse_netlist(CS_AMP).0;
    let log = gen_log(&n, None, &BehaviorModel::default(), &Sweep::default(), &spec()).unwrap();
    assert_eq!(log.output_node, "out");
    assert_eq!(log.len(), 37);
    assert!(log.output().iter().all(|v| spec().contains(*v)));
    assert_eq!(log.node_voltages["in"], log.inputs);
    assert!(log.node_voltages["vdd"].iter().all(|v| *v == 1.8));
    assert_eq!(parse_log(&write_log(&log)).unwrap(), log);
}

fn trojan_fixture() -> (Netlist, crate::inject::InjectionRecord) {
    let host = parse_netlist(CS_AMP).0;
    let (text, rec) = inject_trojan(&host, "cs", "outb", "nb", 0).unwrap();
    (parse_netlist(&text).0, rec)
}

use crate::netlist::Netlist;

#[test]
fn trojan_window_signature() {
    let (n, rec) = trojan_fixture();
    let model = BehaviorModel::default();
    let clean = gen_log(&n, None, &model, &Sweep::default(), &spec()).unwrap();
    let dirty = gen_log(&n, Some(&rec), &model, &Sweep::default(), &spec()).unwrap();
    let inside: Vec<usize> = (0..dirty.len())
        .filter(|&i| (0.8..1.0).contains(&dirty.inputs[i]))
        .collect();
    assert_eq!(inside.len(), 4);
    for i in 0..dirty.len() {
        let out = dirty.output()[i];
        if inside.contains(&i) {
            assert!(out >= spec().v_out_max + model.out_violation - 1e-9);
            let w = rec.wiring.as_ref().unwrap();
            for d in ["Mtj_cp1", "Mtj_cp2", "Mtj_lk"] {
                let ratio = dirty.device_currents[d][i] / clean.device_currents[d][i];
                assert!((ratio - 5.0).abs() < 1e-9, "{d} {ratio}");
            }
            let jump = dirty.node_voltages[&w.cap_node][i] - clean.node_voltages[&w.cap_node][i];
            assert!(jump > 0.0 && jump <= model.node_deviation + 1e-6);
        } else {
            for (k, v) in &dirty.node_voltages {
                assert_eq!(v[i].to_bits(), clean.node_voltages[k][i].to_bits(), "{k}@{i}");
            }
            for (k, v) in &dirty.device_currents {
                assert_eq!(v[i].to_bits(), clean.device_currents[k][i].to_bits());
            }
        }
    }
}

#[test]
fn noise_keeps_window_locality_and_determinism() {
    let (n, rec) = trojan_fixture();
    let model = BehaviorModel { noise_sigma: 0.002, seed: 11, ..Default::default() };
    let a = gen_log(&n, Some(&rec), &model, &Sweep::default(), &spec()).unwrap();
    let b = gen_log(&n, Some(&rec), &model, &Sweep::default(), &spec()).unwrap();
    assert_eq!(a, b);
    assert_eq!(parse_log(&write_log(&a)).unwrap(), a);
}

#[test]
fn empty_sweep() {
    let n = parse_netlist(CS_AMP).0;
    for sweep in [Sweep { lo: 0.0, hi: 1.0, step: 0.0 }, Sweep { lo: 1.0, hi: 1.0, step: 0.1 }] {
        assert_eq!(
            gen_log(&n, None, &BehaviorModel::default(), &sweep, &spec()).unwrap_err(),
            SimlogError::EmptySweep
        );
    }
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn write_parse_round_trip(rows in 2usize..20, cols in 0usize..5, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let inputs: Vec<f64> = (0..rows).map(|i| i as f64 * 0.05).collect();
            let mut nodes = BTreeMap::new();
            nodes.insert("out".to_string(), (0..rows).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<f64>>());
            for c in 0..cols {
                nodes.insert(format!("n{c}"), (0..rows).map(|_| rng.gen_range(-2.0..2.0)).collect());
            }
            let log = SimulationLog { inputs, node_voltages: nodes, device_currents: BTreeMap::new(), output_node: "out".into() };
            let back = parse_log(&write_log(&log)).unwrap();
            for (k, v) in &log.node_voltages {
                for (x, y) in v.iter().zip(&back.node_voltages[k]) {
                    prop_assert!((x - y).abs() <= 1e-5 * x.abs().max(1e-30));
                }
            }
            prop_assert!(back.inputs.windows(2).all(|w| w[1] > w[0]));
        }
    }
}
