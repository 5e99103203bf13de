use deformfield_cli::config::*;
use num_complex::Complex64;

#[test]
fn round_trip() {
    let mut c = PipelineConfig::default();
    c.noise = 0.1;
    c.affine_b = Complex64::new(0.3, -1e-17);
    c.deformation = DeformationKind::Affine;
    let back = PipelineConfig::parse(&c.to_text()).unwrap();
    assert_eq!(back, c);
    assert_eq!(back.to_text(), c.to_text());
}

#[test]
fn unknown_key_is_named() {
    let err = PipelineConfig::parse("nx = 50\nbogus_key = 3\n").unwrap_err();
    assert!(err.to_string().contains("bogus_key"));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn hash_ignores_output_directory() {
    let a = PipelineConfig::default();
    let b = PipelineConfig { out: "elsewhere".into(), ..a.clone() };
    assert_eq!(a.hash(), b.hash());
    let c = PipelineConfig { seed: 2, ..a.clone() };
    assert_ne!(a.hash(), c.hash());
}
