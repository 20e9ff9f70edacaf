//! Convergence-table rows and their CSV / markdown rendering.

/// One refinement level of a convergence study.
///
/// `h_inv` is the subdivision count n of the mesh family on the unit square
/// (characteristic spacing 1/n). Order fields hold log2(e_prev / e_this)
/// against the previous row of the same degree, `None` on the first level.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub k: usize,
    pub h_inv: usize,
    pub err_u: f64,
    pub ord_u: Option<f64>,
    pub err_sigma: f64,
    pub ord_sigma: Option<f64>,
    pub err_sigma_star: f64,
    pub ord_sigma_star: Option<f64>,
    pub err_div: f64,
    pub ord_div: Option<f64>,
}

impl ConvergenceRow {
    /// Fill the order fields from the errors of the previous level.
    pub fn set_orders_from(&mut self, prev: &ConvergenceRow) {
        assert!(prev.k == self.k, "orders compare rows of equal degree");
        self.ord_u = order(prev.err_u, self.err_u);
        self.ord_sigma = order(prev.err_sigma, self.err_sigma);
        self.ord_sigma_star = order(prev.err_sigma_star, self.err_sigma_star);
        self.ord_div = order(prev.err_div, self.err_div);
    }
}

fn order(prev: f64, this: f64) -> Option<f64> {
    if prev > 0.0 && this > 0.0 {
        Some((prev / this).log2())
    } else {
        None
    }
}

const HEADER: [&str; 10] = [
    "k",
    "h_inv",
    "err_u",
    "ord_u",
    "err_sigma",
    "ord_sigma",
    "err_sigma_star",
    "ord_sigma_star",
    "err_div",
    "ord_div",
];

#[derive(Debug, Clone, Default)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    fn cells(row: &ConvergenceRow) -> [String; 10] {
        let e = |v: f64| format!("{v:.3e}");
        let o = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_default();
        [
            row.k.to_string(),
            row.h_inv.to_string(),
            e(row.err_u),
            o(row.ord_u),
            e(row.err_sigma),
            o(row.ord_sigma),
            e(row.err_sigma_star),
            o(row.ord_sigma_star),
            e(row.err_div),
            o(row.ord_div),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut out = HEADER.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&Self::cells(row).join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut widths: Vec<usize> = HEADER.iter().map(|h| h.len()).collect();
        let body: Vec<[String; 10]> = self.rows.iter().map(Self::cells).collect();
        for cells in &body {
            for (w, c) in widths.iter_mut().zip(cells.iter()) {
                *w = (*w).max(c.len());
            }
        }
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c:>w$}"))
                .collect();
            format!("| {} |\n", padded.join(" | "))
        };
        let mut out = line(&HEADER.map(String::from));
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        out.push_str(&format!("| {} |\n", rule.join(" | ")));
        for cells in &body {
            out.push_str(&line(cells));
        }
        out
    }
}
