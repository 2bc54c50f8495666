//! Emitted gnuplot scripts. The CLI never plots anything itself; each run
//! drops small scripts next to its CSVs so `gnuplot <script>` regenerates
//! the figures from the recorded data alone.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

use crate::report::REPORT_COLUMNS;

const PREAMBLE: &str = "set datafile separator ','\n\
                        set datafile commentschars '#'\n\
                        set terminal pngcairo size 1000,700\n";

fn write(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

/// Bloch components and mode-0 phase portraits for every traced input.
pub fn trace_script(dir: &Path, n_modes: usize, trace_files: &[String]) -> Result<String> {
    let sz_col = 2 * n_modes + 4;
    let mut s = String::from("# regenerate trace figures: gnuplot plot_traces.gp\n");
    s.push_str(PREAMBLE);
    s.push_str("set output 'traces_bloch.png'\nset xlabel 't (s)'\nset ylabel 'target-ion <sz>'\nplot \\\n");
    for (i, f) in trace_files.iter().enumerate() {
        let sep = if i + 1 == trace_files.len() { "\n" } else { ", \\\n" };
        let label = f.trim_start_matches("trace_").trim_end_matches(".csv");
        s.push_str(&format!("  '{f}' using 1:{sz_col} with lines title '|{label}>'{sep}"));
    }
    s.push_str("set output 'traces_phase_space.png'\n");
    s.push_str("set xlabel '<x> mode 0'\nset ylabel '<p> mode 0'\nset size ratio -1\nplot \\\n");
    for (i, f) in trace_files.iter().enumerate() {
        let sep = if i + 1 == trace_files.len() { "\n" } else { ", \\\n" };
        let label = f.trim_start_matches("trace_").trim_end_matches(".csv");
        s.push_str(&format!("  '{f}' using 2:3 with lines title '|{label}>'{sep}"));
    }
    let name = "plot_traces.gp";
    write(&dir.join(name), &s)?;
    Ok(name.into())
}

/// Heat maps of the real and imaginary parts of unitary.txt.
pub fn unitary_script(dir: &Path) -> Result<String> {
    let mut s = String::from("# regenerate process-matrix figures: gnuplot plot_unitary.gp\n");
    s.push_str("set datafile commentschars '#'\nset terminal pngcairo size 800,700\n");
    s.push_str("set palette defined (-1 'blue', 0 'white', 1 'red')\nset cbrange [-1:1]\n");
    s.push_str("set output 'unitary_real.png'\nplot 'unitary.txt' index 0 matrix with image title 'Re U'\n");
    s.push_str("set output 'unitary_imag.png'\nplot 'unitary.txt' index 1 matrix with image title 'Im U'\n");
    let name = "plot_unitary.gp";
    write(&dir.join(name), &s)?;
    Ok(name.into())
}

/// Process error against the swept parameter, read out of report.csv by
/// column position.
pub fn sweep_script(dir: &Path, param: &str) -> Result<String> {
    let pcol = REPORT_COLUMNS.iter().position(|&c| c == param).map(|i| i + 1);
    let fcol = REPORT_COLUMNS.iter().position(|&c| c == "fbar").unwrap() + 1;
    let Some(pcol) = pcol else {
        anyhow::bail!("no report column for sweep parameter {param}");
    };
    let mut s = String::from("# regenerate the sweep figure: gnuplot plot_sweep.gp\n");
    s.push_str(PREAMBLE);
    s.push_str("set output 'sweep.png'\nset logscale y\n");
    s.push_str(&format!("set xlabel '{param}'\nset ylabel 'process error 1 - fbar'\n"));
    s.push_str(&format!(
        "plot 'report.csv' using {pcol}:(1 - column({fcol})) with linespoints title '1 - fbar'\n"
    ));
    let name = "plot_sweep.gp";
    write(&dir.join(name), &s)?;
    Ok(name.into())
}

/// Comb spectrum: signed tone amplitudes at their frequencies.
pub fn tones_script(dir: &Path) -> Result<String> {
    let mut s = String::from("# regenerate the comb spectrum: gnuplot plot_tones.gp\n");
    s.push_str(PREAMBLE);
    s.push_str("set output 'tones.png'\nset xlabel 'tone frequency (kHz)'\nset ylabel 'amplitude (kHz)'\n");
    s.push_str("plot 'tones.csv' using 2:3 with impulses title 'comb tones'\n");
    let name = "plot_tones.gp";
    write(&dir.join(name), &s)?;
    Ok(name.into())
}
