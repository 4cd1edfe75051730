fn main() {
    use trapdyn::trap::*;
    use trapdyn::disk::*;
    use trapdyn::dynamics::*;
    let cfg = TrapConfig {
        charge: 1.0, mass: 1.0, b0: 2.0, u0: -0.75, v0: 0.0, omega_rf: 10.0,
        r0: 1.0, z0: 1.0, c_oct: 0.0, c_hex: 0.0,
        omega_a_ref: 1.0, omega_r_ref: 0.5f64.sqrt(),
        l: 0, m_a: 0, m_r: 0, axial_sector: AxialSector::Even,
        drive_mode: DriveMode::Static, hbar: 1.0,
    };
    let s0 = cfg.product_state(DiskPoint::origin(), DiskPoint::origin()).unwrap();
    let traj = integrate(&cfg, &s0, (0.0, 40.0), 1e-10).unwrap();
    println!("n = {}, max|z| = {:e}, drift = {:e}", traj.times.len(), traj.max_abs_z(), traj.relative_energy_drift());
    for i in [0usize, 1, 2, traj.times.len()-1] {
        let s = &traj.states[i];
        println!("t={:.3} za={:?} zr={:?} E={}", traj.times[i], s.axial().point.z(), s.radial().point.z(), traj.energy[i]);
    }
    // mismatched reference conservation case
    let cfg2 = TrapConfig { omega_a_ref: 1.0, omega_r_ref: 1.3, ..cfg.clone() };
    let s0 = cfg2.product_state(DiskPoint::from_re_im(0.3, 0.1).unwrap(), DiskPoint::from_re_im(-0.2, 0.25).unwrap()).unwrap();
    for tol in [1e-10f64, 1e-11, 1e-12, 1e-13] {
        let traj = integrate(&cfg2, &s0, (0.0, 100.0 * std::f64::consts::TAU), tol).unwrap();
        println!("tol={tol:e}: drift = {:e}, steps={}", traj.relative_energy_drift(), traj.stats.accepted);
    }
}
