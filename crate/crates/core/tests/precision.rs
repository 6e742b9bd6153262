use std::sync::Arc;

use metawave::stepper::Unforced;
use metawave::{
    BoundaryLabel, BoundaryPart, CnSystem, EnergyForm, MaterialField, Mesh, Pairing, Rect,
    RegionCoefficients, Spaces, StateVector, SystemBlocks,
};

fn energy_drift<T: metawave::Scalar>(pairing: Pairing) -> f64 {
    let mesh = Mesh::<T>::build_structured(Rect::unit(), 4)
        .unwrap()
        .classify_boundary(vec![BoundaryPart::all(BoundaryLabel::dirichlet("b"))])
        .unwrap();
    let s = Spaces::new(Arc::new(mesh), pairing).unwrap();
    let coeffs = RegionCoefficients::nim(T::lit(1.0), T::lit(1.0), T::lit(2.0), T::lit(1.5));
    let mat = MaterialField::uniform(
        s.mesh().num_cells(),
        coeffs,
        T::lit(3.0),
        T::lit(2.0),
        T::zero(),
    );
    let dt = T::lit(0.02);
    let sys = CnSystem::new(&s, &SystemBlocks::assemble(&s, &mat).unwrap(), dt).unwrap();
    let mut st = StateVector::zeros(&s);
    let x: Vec<T> = (0..st.len())
        .map(|i| T::lit(((i * 37) % 19) as f64 / 19.0 - 0.5))
        .collect();
    st.set_flat(&x).unwrap();
    let form = EnergyForm::new(&s, &mat).unwrap();
    let e0 = form.energy(&st).unwrap().as_f64();
    let loads = sys.loads(&Unforced, T::zero()).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        st = sys.step(&st, &loads, &loads).unwrap();
        worst = worst.max((form.energy(&st).unwrap().as_f64() - e0).abs() / e0);
    }
    worst
}

#[test]
fn single_precision_conserves_energy_to_roundoff() {
    for p in Pairing::ALL {
        let d32 = energy_drift::<f32>(p);
        let d64 = energy_drift::<f64>(p);
        assert!(d32 < 1e-3, "{p}: f32 drift {d32}");
        assert!(d64 < 1e-11, "{p}: f64 drift {d64}");
    }
}
