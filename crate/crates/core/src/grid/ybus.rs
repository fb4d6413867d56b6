use num_complex::Complex64;

use crate::ingest::NetworkCase;

/// Bus admittance matrix in compressed sparse row form, columns sorted
/// within each row.
#[derive(Debug, Clone)]
pub struct Ybus {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<Complex64>,
}

impl Ybus {
    pub fn build(case: &NetworkCase) -> Ybus {
        let n = case.buses.len();
        let index = case.bus_index();
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); n];
        let mut add = |i: usize, k: usize, y: Complex64| {
            match rows[i].iter_mut().find(|(c, _)| *c == k) {
                Some((_, v)) => *v += y,
                None => rows[i].push((k, y)),
            }
        };
        for (i, bus) in case.buses.iter().enumerate() {
            add(i, i, Complex64::new(bus.gs, bus.bs) / case.base_mva);
        }
        for br in case.branches.iter().filter(|b| b.in_service) {
            let (f, t) = (index[&br.from], index[&br.to]);
            let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
            let ratio = if br.ratio == 0.0 { 1.0 } else { br.ratio };
            let tap = Complex64::from_polar(ratio, br.angle.to_radians());
            let ytt = ys + Complex64::new(0.0, br.b / 2.0);
            add(f, f, ytt / (tap * tap.conj()));
            add(t, t, ytt);
            add(f, t, -ys / tap.conj());
            add(t, f, -ys / tap);
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let (mut col, mut val) = (Vec::new(), Vec::new());
        row_ptr.push(0);
        for mut r in rows {
            r.sort_by_key(|(c, _)| *c);
            for (c, v) in r {
                col.push(c);
                val.push(v);
            }
            row_ptr.push(col.len());
        }
        Ybus { n, row_ptr, col, val }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (self.col[p], self.val[p]))
    }

    /// Complex bus currents `I = Y V`.
    pub fn currents(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(k, y)| y * v[k]).sum())
            .collect()
    }

    /// Buses adjacent to `i` (excluding `i`).
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(i).map(|(k, _)| k).filter(move |&k| k != i)
    }
}
