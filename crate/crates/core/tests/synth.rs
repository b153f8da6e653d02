use cssnmf::synth::{
    gaussian_noise, gen_dirichlet, gen_midpoints, gen_outliers, midpoint_noise, DirichletParams,
    MidpointParams, OutlierParams, SyntheticInstance,
};
use cssnmf::RngStream;

#[test]
fn paper_dimensions() {
    let d = gen_dirichlet(
        7,
        &DirichletParams {
            eps: 1e-3,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(d.m.shape(), (30, 100));
    let m = gen_midpoints(1, &MidpointParams::default()).unwrap();
    assert_eq!(m.m.shape(), (30, 95));
    let o = gen_outliers(
        1,
        &OutlierParams {
            ell: 15,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(o.m.shape(), (30, 65));
    assert_eq!(o.outliers.len(), 15);
}

#[test]
fn columns_are_l1_normalized_and_nonnegative() {
    for inst in [
        gen_dirichlet(
            1,
            &DirichletParams {
                eps: 0.5,
                ..Default::default()
            },
        )
        .unwrap(),
        gen_midpoints(
            1,
            &MidpointParams {
                eps: 0.5,
                ..Default::default()
            },
        )
        .unwrap(),
        gen_outliers(1, &OutlierParams::default()).unwrap(),
    ] {
        assert!(inst.m.data().iter().all(|&v| v >= 0.0));
        for s in inst.m.col_l1_norms() {
            assert!((s - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn noise_is_scaled_before_clipping() {
    let base = gen_dirichlet(2, &DirichletParams::default()).unwrap();
    let m0 = base.w_true.matmul(&base.h_true);
    let mut rng = RngStream::new(4);
    for eps in [1e-5, 1e-2, 0.7] {
        let n = gaussian_noise(&m0, eps, &mut rng);
        assert!((n.frobenius_norm() / m0.frobenius_norm() - eps).abs() <= 1e-12 * eps);
    }
    let mid = gen_midpoints(3, &MidpointParams::default()).unwrap();
    let m0 = mid.w_true.matmul(&mid.h_true);
    let n = midpoint_noise(&m0, 50, 0.1);
    assert!((n.frobenius_norm() / m0.frobenius_norm() - 0.1).abs() <= 1e-12);
    assert!((0..50).all(|j| n.col(j).iter().all(|&v| v == 0.0)));
}

#[test]
fn same_seed_same_instance() {
    let p = DirichletParams {
        eps: 1e-2,
        ..Default::default()
    };
    assert_eq!(
        gen_dirichlet(11, &p).unwrap().m,
        gen_dirichlet(11, &p).unwrap().m
    );
    assert_ne!(
        gen_dirichlet(11, &p).unwrap().m,
        gen_dirichlet(12, &p).unwrap().m
    );
}

#[test]
fn instance_directory_round_trip() {
    let inst = gen_outliers(
        5,
        &OutlierParams {
            ell: 2,
            ..Default::default()
        },
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    inst.save(dir.path()).unwrap();
    let back = SyntheticInstance::load(dir.path()).unwrap();
    assert_eq!(back.m, inst.m);
    assert_eq!(back.labels, inst.labels);
    assert_eq!(back.j0, inst.j0);
    assert_eq!(back.outliers, inst.outliers);
}
