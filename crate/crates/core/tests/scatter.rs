use roughvol_core::bootstrap::export_scatter_matrix;
use roughvol_core::model::ModelParams;

fn samples() -> Vec<ModelParams> {
    [
        [0.25, -0.5, 0.125, 1.0, 0.0],
        [0.5, -0.5, 0.25, 2.0, 0.0],
        [0.75, -0.5, 0.125, 3.0, 1.0],
        [1.0, -0.5, 0.25, 4.0, 1.0],
    ]
    .map(ModelParams::from_array)
    .to_vec()
}

#[test]
fn scatter_matrix_matches_golden_file() {
    let thetas = samples();
    let hat = ModelParams::from_array([0.625, -0.5, 0.1875, 2.5, 0.5]);
    let overall = ModelParams::from_array([0.5, -0.25, 0.125, 2.0, 0.5]);
    let mut out = Vec::new();
    export_scatter_matrix(&thetas, &hat, &overall, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let golden = include_str!("golden/scatter_matrix.csv");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/scatter_matrix.csv"), &text).unwrap();
        return;
    }
    assert_eq!(text, golden);
}

#[test]
fn scatter_matrix_needs_two_samples() {
    let one = &samples()[..1];
    assert!(export_scatter_matrix(one, &one[0], &one[0], Vec::new()).is_err());
}
