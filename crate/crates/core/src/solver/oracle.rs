use num_complex::Complex64;

use super::{guard, steps_for, Model};
use crate::error::Result;
use crate::noise::NoisePath;
use crate::operators::nonlinear_b;
use crate::spectrum::{eigenvalue, index, ScalarSpectrum};

/// Integrates `u` directly, without the `v + z` splitting:
///
/// ```text
/// du + (nu A + C) u dt + B(u, u) dt = f dt + G dW
/// ```
///
/// The deterministic part uses Lawson RK4 (integrating factor
/// `e^{-(nu A + C) t}`); the noise enters as the exponential-Euler
/// stochastic convolution over each step, built from the same increments
/// that drive `z`. Cross-validation oracle for [`Model::rds_phi`].
pub fn direct_u_oracle(model: &Model, t_len: f64, path: &NoisePath, x0: &ScalarSpectrum, dt: f64) -> Result<ScalarSpectrum> {
    x0.check_truncation(model.truncation())?;
    let n = steps_for(t_len, dt)?;
    let sub = steps_for(dt, path.dt_noise())?;
    let lmax = model.truncation();
    let cfg = model.config();
    let dn = path.dt_noise();

    let half: Vec<Complex64> = model.symbol.iter().map(|s| (-s * (0.5 * dt)).exp()).collect();
    let full: Vec<Complex64> = model.symbol.iter().map(|s| (-s * dt).exp()).collect();
    let decay: Vec<Complex64> = model.symbol.iter().map(|s| (-s * dn).exp()).collect();
    let kick: Vec<f64> = (0..model.symbol.len())
        .map(|i| {
            let l = (i as f64).sqrt().floor() as usize;
            if l == 0 {
                return 0.0;
            }
            let g = cfg.noise.gain(l) / eigenvalue(l).sqrt();
            let x = 2.0 * model.symbol[i].re * dn;
            if x > 0.0 {
                g * (-(-x).exp_m1() / x).sqrt()
            } else {
                g
            }
        })
        .collect();
    let noisy = kick.iter().any(|&k| k != 0.0);

    let rhs = |u: &ScalarSpectrum| -> Result<ScalarSpectrum> {
        let mut out = model.forcing().clone();
        if cfg.nonlinear {
            out.axpy(-1.0, &nonlinear_b(model.context(), u)?);
        }
        Ok(out)
    };
    let mul = |w: &[Complex64], u: &ScalarSpectrum| -> ScalarSpectrum {
        let mut out = u.clone();
        out.coeffs_mut().iter_mut().zip(w).for_each(|(c, e)| *c *= e);
        out
    };

    let mut u = x0.clone();
    for step in 0..n {
        let k1 = rhs(&u)?;
        let mut a = u.clone();
        a.axpy(0.5 * dt, &k1);
        let k2 = rhs(&mul(&half, &a))?;
        let mut b = mul(&half, &u);
        b.axpy(0.5 * dt, &k2);
        let k3 = rhs(&b)?;
        let mut c = mul(&full, &u);
        c.axpy(dt, &mul(&half, &k3));
        let k4 = rhs(&c)?;

        let mut next = u.clone();
        next.axpy(dt / 6.0, &k1);
        next = mul(&full, &next);
        let mut mid = k2.scale(2.0);
        mid.axpy(2.0, &k3);
        next.axpy(dt / 6.0, &mul(&half, &mid));
        next.axpy(dt / 6.0, &k4);

        if noisy {
            let k0 = (step * sub) as i64;
            for l in 1..=lmax {
                for m in 0..=l as i64 {
                    let i = index(l, m);
                    let mut y = Complex64::default();
                    for k in k0..k0 + sub as i64 {
                        y = decay[i] * y + path.increment(l, m, k) * kick[i];
                    }
                    next.set(l, m, next.get(l, m) + y);
                }
            }
        }
        next.enforce_real();
        guard(&u, &next, (step + 1) as f64 * dt)?;
        u = next;
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseSpec;
    use crate::operators::OperatorVariant;
    use crate::solver::{IntegratorConfig, ModelConfig};

    #[test]
    fn zero_in_zero_out() {
        let m = Model::new(ModelConfig::quiet(5, 1.0, OperatorVariant::DeltaOnly)).unwrap();
        let z = ScalarSpectrum::zeros(5);
        assert_eq!(direct_u_oracle(&m, 0.5, &m.path(), &z, 0.01).unwrap(), z);
    }

    #[test]
    fn deterministic_agreement() {
        let mut cfg = ModelConfig::quiet(8, 0.05, OperatorVariant::DeltaOnly);
        cfg.omega = 1.0;
        cfg.noise = NoiseSpec::new(0.0, 1.0, 8, 1, 0.0002);
        let m = Model::new(cfg).unwrap();
        let x0 = m.random_initial(4, 0, 1.0, 1.0);
        let reference = direct_u_oracle(&m, 0.5, &m.path(), &x0, 0.001).unwrap();
        let etd = m.rds_phi(0.5, &m.path(), &x0, &IntegratorConfig::new(0.0002)).unwrap();
        assert!(reference.sub(&etd).velocity_energy().sqrt() < 1e-8);
    }
}
