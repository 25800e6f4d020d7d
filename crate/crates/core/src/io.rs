//! CSV exports. Floats are written with Rust's shortest round-trip formatting,
//! so equal inputs give byte-identical files.

use std::io::Write;

use num_complex::Complex64;

/// `re,im` rows.
pub fn write_complex_csv<W: Write>(mut out: W, values: &[Complex64]) -> std::io::Result<()> {
    writeln!(out, "re,im")?;
    for v in values {
        writeln!(out, "{},{}", v.re, v.im)?;
    }
    Ok(())
}

pub fn write_eigenvalues_csv<W: Write>(out: W, eigenvalues: &[Complex64]) -> std::io::Result<()> {
    write_complex_csv(out, eigenvalues)
}

/// Singular values of `M - zI`, one per row, after a `# z_re=..,z_im=..` line.
pub fn write_singular_values_csv<W: Write>(mut out: W, z: Complex64, sigma: &[f64]) -> std::io::Result<()> {
    writeln!(out, "# z_re={},z_im={}", z.re, z.im)?;
    writeln!(out, "sigma")?;
    for s in sigma {
        writeln!(out, "{s}")?;
    }
    Ok(())
}

pub fn write_density_csv<W: Write>(
    mut out: W,
    z: Complex64,
    rho: f64,
    epsilon: f64,
    table: &[(f64, f64)],
) -> std::io::Result<()> {
    writeln!(out, "# z_re={},z_im={},rho={rho},epsilon={epsilon}", z.re, z.im)?;
    writeln!(out, "x,density")?;
    for (x, d) in table {
        writeln!(out, "{x},{d}")?;
    }
    Ok(())
}
