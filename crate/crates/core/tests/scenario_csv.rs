use eqobs::error::Error;
use eqobs::scenario::{format_g17, run_simulation, write_csv, Scenario, TrajectoryRecord};

const SHORT: &str = r#"
system = "so3_attitude"
t_end = 0.5
dt = 0.05
seed = 4
[velocity]
profile = "constant"
value = [0.1, -0.2, 0.3]
[observer]
perturbation = [0.3, 0.1, 0.0]
[noise]
output_std = 0.01
"#;

#[test]
fn csv_round_trips_through_text() {
    let rec = run_simulation(&Scenario::from_toml(SHORT).unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    write_csv(&rec, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 3 + 3 * 9);
    assert_eq!(header[0], "t");
    assert_eq!(*header.last().unwrap(), "innovation_norm");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|s| s.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), rec.rows.len());
    for (parsed, row) in rows.iter().zip(&rec.rows) {
        // %.17g survives a text round trip bit for bit
        assert_eq!(parsed[0].to_bits(), row.t.to_bits());
        assert_eq!(&parsed[1..10], row.truth.as_slice());
        assert_eq!(parsed[parsed.len() - 2].to_bits(), row.error_metric.to_bits());
    }
}

#[test]
fn empty_record_writes_header_only() {
    let rec = TrajectoryRecord {
        system: "s2_direction".into(),
        coord_names: vec!["x".into(), "y".into(), "z".into()],
        rows: vec![],
    };
    let csv = rec.to_csv();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("t,truth_x,"));
}

#[test]
fn g17_matches_c_printf() {
    assert_eq!(format_g17(std::f64::consts::PI), "3.1415926535897931");
    assert_eq!(format_g17(9.079_985_953_374_536e-5), "9.0799859533745363e-05");
}

#[test]
fn bad_scenarios_name_the_field() {
    let cases = [
        ("system = \"torus\"\nt_end = 1.0\ndt = 0.1\n", "system"),
        ("system = \"s2_direction\"\nt_end = 1.0\ndt = -0.1\n", "dt"),
        (
            "system = \"s2_direction\"\nt_end = 1.0\ndt = 0.1\n[truth]\npoint = [1.0, 1.0, 0.0]\n",
            "truth.point",
        ),
        (
            "system = \"s2_direction\"\nt_end = 1.0\ndt = 0.1\nbogus = 2\n",
            "<document>",
        ),
    ];
    for (text, field) in cases {
        let err = Scenario::from_toml(text).and_then(|s| run_simulation(&s).map(|_| ()));
        match err {
            Err(Error::Config { field: f, .. }) => assert_eq!(f, field, "{text}"),
            other => panic!("{text}: expected config error, got {other:?}"),
        }
    }
}

#[test]
fn shipped_scenarios_load() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let sc = Scenario::load(&path).unwrap();
        sc.validate().unwrap();
    }
}
