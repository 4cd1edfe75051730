fn main() {
    use trapdyn::trap::*;
    use trapdyn::husimi::*;
    let mut cfg = TrapConfig {
        charge: 1.0, mass: 1.0, b0: 2.0, u0: -0.75, v0: 0.0, omega_rf: 10.0,
        r0: 1.0, z0: 1.0, c_oct: 0.0, c_hex: 0.0,
        omega_a_ref: 1.0, omega_r_ref: 0.5f64.sqrt(),
        l: 0, m_a: 0, m_r: 0, axial_sector: AxialSector::Even,
        drive_mode: DriveMode::Static, hbar: 1.0,
    };
    cfg.c_oct = 0.002;
    let h = assemble(&cfg, 0.0).unwrap();
    println!("coeffs: {:#?}", h.current);
    let report = find_equilibria(&cfg).unwrap();
    for e in &report.equilibria {
        println!("eq: z_a={} z_r={} class={:?} eigs={:?} |g|={:e}",
            e.state.axial().point.z(), e.state.radial().point.z(),
            e.classification, e.hessian_eigenvalues, e.gradient_norm);
    }
    println!("diagnostics ({}):", report.diagnostics.len());
    for d in report.diagnostics.iter().take(8) { println!("  {d}"); }
}
