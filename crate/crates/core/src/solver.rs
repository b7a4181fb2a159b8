//! Numerical solution of the tree generating-function recursions on a
//! discretized (z, t) grid under the Uniform(0,1) time-change.
//!
//! State is the pgf deficiency phi(z,t) = 1 - E[z^X(t)] together with its
//! running time integral Psi(z,t). The z-integrals use composite trapezoid;
//! time marching is Heun (one predictor-corrector pass), so everything is
//! second order and Richardson extrapolation at h and h/2 gives a usable
//! error estimate.

use crate::error::Error;
use crate::models::{self, AgentId, GwOffspring, MeetingModel};
use crate::Result;

/// Uniform z-grid on [0,1] and uniform time steps up to t_max <= 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    m_z: usize,
    t_step: f64,
    t_max: f64,
}

impl Grid {
    pub fn new(m_z: usize, t_step: f64, t_max: f64) -> Result<Grid> {
        if m_z < 3 {
            return Err(Error::invalid("grid needs at least 3 z-points"));
        }
        if !(t_step > 0.0) || !(0.0..=1.0).contains(&t_max) {
            return Err(Error::invalid("grid needs t_step > 0 and t_max in [0,1]"));
        }
        let steps = (t_max / t_step).round();
        if steps < 1.0 || (steps * t_step - t_max).abs() > 1e-9 {
            return Err(Error::invalid("t_step must divide t_max"));
        }
        Ok(Grid { m_z, t_step, t_max })
    }

    pub fn m_z(&self) -> usize {
        self.m_z
    }

    pub fn t_step(&self) -> f64 {
        self.t_step
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn dz(&self) -> f64 {
        1.0 / (self.m_z as f64 - 1.0)
    }

    pub fn n_steps(&self) -> usize {
        (self.t_max / self.t_step).round() as usize
    }

    pub fn z_points(&self) -> Vec<f64> {
        (0..self.m_z).map(|k| k as f64 * self.dz()).collect()
    }

    pub fn t_points(&self) -> Vec<f64> {
        (0..=self.n_steps())
            .map(|j| j as f64 * self.t_step)
            .collect()
    }

    /// Same domain at half the mesh width in both directions.
    pub fn refined(&self) -> Grid {
        Grid {
            m_z: 2 * (self.m_z - 1) + 1,
            t_step: self.t_step / 2.0,
            t_max: self.t_max,
        }
    }
}

/// phi and its companion integral Psi, row-per-time-node.
#[derive(Debug, Clone)]
pub struct PgfTable {
    grid: Grid,
    phi: Vec<Vec<f64>>,
    psi: Vec<Vec<f64>>,
}

impl PgfTable {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// phi at (z_index, t_index).
    pub fn phi(&self, z_index: usize, t_index: usize) -> f64 {
        self.phi[t_index][z_index]
    }

    pub fn psi(&self, z_index: usize, t_index: usize) -> f64 {
        self.psi[t_index][z_index]
    }

    pub fn phi_rows(&self) -> &[Vec<f64>] {
        &self.phi
    }

    /// Range, boundary and monotonicity invariants, checked after solves.
    pub fn validate(&self) -> Result<()> {
        let dz = self.grid.dz();
        let tol = 1e-9;
        for (j, row) in self.phi.iter().enumerate() {
            let last = row[row.len() - 1];
            if last.abs() > tol {
                return Err(Error::violation(format!("phi(1, t_{j}) = {last} != 0")));
            }
            for (k, &v) in row.iter().enumerate() {
                if !(-tol..=1.0 + tol).contains(&v) {
                    return Err(Error::violation(format!("phi out of [0,1]: {v}")));
                }
                if k > 0 && v > row[k - 1] + tol {
                    return Err(Error::violation("phi not nonincreasing in z".to_string()));
                }
            }
        }
        for (k, &v) in self.phi[0].iter().enumerate() {
            if (v - (1.0 - k as f64 * dz)).abs() > tol {
                return Err(Error::violation("phi(z,0) != 1 - z".to_string()));
            }
        }
        for j in 1..self.psi.len() {
            let t = j as f64 * self.grid.t_step;
            for k in 0..self.grid.m_z {
                if self.psi[j][k] + tol < self.psi[j - 1][k] {
                    return Err(Error::violation("Psi decreasing in t".to_string()));
                }
                if self.psi[j][k] > t + tol {
                    return Err(Error::violation("Psi exceeds t".to_string()));
                }
            }
        }
        Ok(())
    }
}

/// I[k] = integral of g over [z_k, 1], composite trapezoid.
fn suffix_trapezoid(g: &[f64], dz: f64) -> Vec<f64> {
    let m = g.len();
    let mut out = vec![0.0; m];
    for k in (0..m - 1).rev() {
        out[k] = out[k + 1] + 0.5 * dz * (g[k] + g[k + 1]);
    }
    out
}

/// phi(z) = integral over [z,1] of f(1 - Psi(xi)) d xi.
fn apply_recursion<F: Fn(f64) -> f64>(psi: &[f64], f: &F, dz: f64) -> Vec<f64> {
    let g: Vec<f64> = psi.iter().map(|&p| f(1.0 - p)).collect();
    suffix_trapezoid(&g, dz)
}

/// Heun time marching of phi = G(Psi), dPsi/dt = phi.
fn march<F: Fn(f64) -> f64>(f: F, grid: Grid) -> PgfTable {
    let dz = grid.dz();
    let dt = grid.t_step;
    let m = grid.m_z;
    let steps = grid.n_steps();
    let mut phi = Vec::with_capacity(steps + 1);
    let mut psi = Vec::with_capacity(steps + 1);
    psi.push(vec![0.0; m]);
    phi.push(apply_recursion(&psi[0], &f, dz));
    for j in 0..steps {
        let predictor: Vec<f64> = psi[j]
            .iter()
            .zip(&phi[j])
            .map(|(&p, &v)| p + dt * v)
            .collect();
        let phi_tilde = apply_recursion(&predictor, &f, dz);
        let next_psi: Vec<f64> = psi[j]
            .iter()
            .zip(phi[j].iter().zip(&phi_tilde))
            .map(|(&p, (&v0, &v1))| p + 0.5 * dt * (v0 + v1))
            .collect();
        phi.push(apply_recursion(&next_psi, &f, dz));
        psi.push(next_psi);
    }
    PgfTable { grid, phi, psi }
}

/// phi_d for the infinite d-ary tree: integrand (1 - Psi)^d.
pub fn solve_dary_fixed_point(d: usize, grid: Grid) -> Result<PgfTable> {
    if d == 0 {
        return Err(Error::invalid("solve_dary_fixed_point requires d >= 1"));
    }
    let table = march(move |x: f64| x.powi(d as i32), grid);
    table.validate()?;
    Ok(table)
}

/// Annealed Galton-Watson recursion: integrand F_pi(1 - Psi).
pub fn solve_gw(offspring: &GwOffspring, grid: Grid) -> Result<PgfTable> {
    let pmf = offspring.pmf().to_vec();
    let f = move |x: f64| pmf.iter().rev().fold(0.0, |acc, &p| acc * x + p);
    let table = march(f, grid);
    table.validate()?;
    Ok(table)
}

/// phi*_r for the r-regular infinite tree: solve the (r-1)-ary problem, then
/// one outer integral with exponent r.
pub fn solve_r_regular(r: usize, grid: Grid) -> Result<PgfTable> {
    if r < 2 {
        return Err(Error::invalid("solve_r_regular requires r >= 2"));
    }
    let inner = solve_dary_fixed_point(r - 1, grid)?;
    let dz = grid.dz();
    let dt = grid.t_step;
    let phi: Vec<Vec<f64>> = inner
        .psi
        .iter()
        .map(|psi_row| apply_recursion(psi_row, &|x: f64| x.powi(r as i32), dz))
        .collect();
    let mut psi = vec![vec![0.0; grid.m_z]];
    for j in 1..phi.len() {
        let row: Vec<f64> = psi[j - 1]
            .iter()
            .zip(phi[j - 1].iter().zip(&phi[j]))
            .map(|(&p, (&a, &b))| p + 0.5 * dt * (a + b))
            .collect();
        psi.push(row);
    }
    let table = PgfTable { grid, phi, psi };
    table.validate()?;
    Ok(table)
}

/// Bottom-up evaluation of the finite-tree recursion: leaves have
/// phi = 1 - z; each internal vertex integrates the product of
/// (1 - Psi_child) over its children.
pub fn solve_tree_recursion(tree: &MeetingModel, root: AgentId, grid: Grid) -> Result<PgfTable> {
    if !models::is_tree(tree) {
        return Err(Error::invalid("solve_tree_recursion requires a tree"));
    }
    if root >= tree.n() {
        return Err(Error::invalid("root out of range"));
    }
    let adj = tree.adjacency();
    // BFS order from the root; process in reverse so children come first.
    let n = tree.n();
    let mut parent = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = std::collections::VecDeque::from([root]);
    let mut seen = vec![false; n];
    seen[root] = true;
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = v;
                queue.push_back(w);
            }
        }
    }
    let mut children = vec![Vec::new(); n];
    for &v in &order {
        if parent[v] != usize::MAX {
            children[parent[v]].push(v);
        }
    }

    let dz = grid.dz();
    let dt = grid.t_step;
    let m = grid.m_z;
    let steps = grid.n_steps();
    // Psi tables of finished subtrees, dropped once the parent consumed them.
    let mut psi_of: Vec<Option<Vec<Vec<f64>>>> = vec![None; n];
    let mut root_table = None;
    for &v in order.iter().rev() {
        let mut phi = Vec::with_capacity(steps + 1);
        for j in 0..=steps {
            let mut g = vec![1.0; m];
            for &c in &children[v] {
                let cpsi = psi_of[c].as_ref().expect("child solved first");
                for k in 0..m {
                    g[k] *= 1.0 - cpsi[j][k];
                }
            }
            phi.push(suffix_trapezoid(&g, dz));
        }
        for &c in &children[v] {
            psi_of[c] = None;
        }
        let mut psi = vec![vec![0.0; m]];
        for j in 1..=steps {
            let row: Vec<f64> = psi[j - 1]
                .iter()
                .zip(phi[j - 1].iter().zip(&phi[j]))
                .map(|(&p, (&a, &b))| p + 0.5 * dt * (a + b))
                .collect();
            psi.push(row);
        }
        if v == root {
            root_table = Some(PgfTable { grid, phi, psi });
        } else {
            psi_of[v] = Some(psi);
        }
    }
    let table = root_table.expect("root visited");
    table.validate()?;
    Ok(table)
}

/// phi(0, t) = P(X(t) > 0). Off-grid t snaps to the nearest node; the flag
/// reports whether t was on the grid.
pub fn solvent_probability(table: &PgfTable, t: f64) -> (f64, bool) {
    let dt = table.grid.t_step;
    let j = ((t / dt).round() as usize).min(table.phi.len() - 1);
    let on_grid = (t - j as f64 * dt).abs() < 1e-9;
    (table.phi[j][0], on_grid)
}

/// A solvable problem descriptor, for grid-refinement studies.
#[derive(Debug, Clone)]
pub enum Problem<'a> {
    Dary(usize),
    Gw(&'a GwOffspring),
    Regular(usize),
    Tree(&'a MeetingModel, AgentId),
}

impl Problem<'_> {
    pub fn solve(&self, grid: Grid) -> Result<PgfTable> {
        match *self {
            Problem::Dary(d) => solve_dary_fixed_point(d, grid),
            Problem::Gw(off) => solve_gw(off, grid),
            Problem::Regular(r) => solve_r_regular(r, grid),
            Problem::Tree(model, root) => solve_tree_recursion(model, root, grid),
        }
    }
}

/// Solve at h and h/2; report the fine value at (z=0, t_max) and the
/// second-order Richardson error estimate |phi_h - phi_{h/2}| / 3.
pub fn refine_and_estimate_error(problem: &Problem, grid: Grid) -> Result<(f64, f64)> {
    let coarse = problem.solve(grid)?;
    let fine = problem.solve(grid.refined())?;
    let vc = coarse.phi.last().unwrap()[0];
    let vf = fine.phi.last().unwrap()[0];
    Ok((vf, (vc - vf).abs() / 3.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{dary_tree, from_edge_list};
    use crate::oracle;

    fn grid(m_z: usize, dt: f64) -> Grid {
        Grid::new(m_z, dt, 1.0).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(2, 0.1, 1.0).is_err());
        assert!(Grid::new(11, 0.3, 1.0).is_err()); // 0.3 does not divide 1
        assert!(Grid::new(11, 0.1, 1.5).is_err());
        let g = grid(11, 0.25);
        assert_eq!(g.z_points().len(), 11);
        assert_eq!(g.t_points(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn single_vertex_tree_exact() {
        let tree = dary_tree(2, 0).unwrap();
        let table = solve_tree_recursion(&tree, 0, grid(21, 0.125)).unwrap();
        for (j, _) in table.grid().t_points().iter().enumerate() {
            for (k, z) in table.grid().z_points().iter().enumerate() {
                assert!((table.phi(k, j) - (1.0 - z)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_agent_tree_matches_exact_law() {
        // root + one leaf: phi(z,t) = (1-z) - t(1-z)^2/2; the discretization
        // is exact here (linear integrands), so tolerance is roundoff.
        let tree = from_edge_list(2, &[(0, 1)]).unwrap();
        let table = solve_tree_recursion(&tree, 0, grid(41, 0.05)).unwrap();
        for (j, t) in table.grid().t_points().iter().enumerate() {
            for (k, z) in table.grid().z_points().iter().enumerate() {
                let exact = (1.0 - z) - t * (1.0 - z) * (1.0 - z) / 2.0;
                assert!(
                    (table.phi(k, j) - exact).abs() < 1e-12,
                    "z={z} t={t}: {} vs {exact}",
                    table.phi(k, j)
                );
            }
        }
    }

    #[test]
    fn dary_initial_condition_and_bounds() {
        for d in [1usize, 2, 5] {
            let table = solve_dary_fixed_point(d, grid(101, 0.02)).unwrap();
            for (k, z) in table.grid().z_points().iter().enumerate() {
                assert!((table.phi(k, 0) - (1.0 - z)).abs() < 1e-12);
            }
            for (j, t) in table.grid().t_points().iter().enumerate() {
                for (k, z) in table.grid().z_points().iter().enumerate() {
                    let b = oracle::dary_phi_bounds(d, *z, *t).unwrap();
                    let v = table.phi(k, j);
                    assert!(
                        v >= b.lower - 5e-4 && v <= b.upper + 5e-4,
                        "d={d} z={z} t={t}: {v} not in [{}, {}]",
                        b.lower,
                        b.upper
                    );
                }
            }
        }
    }

    #[test]
    fn gw_degenerate_pmfs() {
        let g = grid(51, 0.05);
        let dead = GwOffspring::new(vec![1.0]).unwrap();
        let table = solve_gw(&dead, g).unwrap();
        for (j, _) in table.grid().t_points().iter().enumerate() {
            for (k, z) in table.grid().z_points().iter().enumerate() {
                assert!((table.phi(k, j) - (1.0 - z)).abs() < 1e-12);
            }
        }
        let binary = GwOffspring::new(vec![0.0, 0.0, 1.0]).unwrap();
        let via_gw = solve_gw(&binary, g).unwrap();
        let via_dary = solve_dary_fixed_point(2, g).unwrap();
        for j in 0..=g.n_steps() {
            for k in 0..g.m_z() {
                assert!((via_gw.phi(k, j) - via_dary.phi(k, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gw_poisson_matches_closed_form_coarse() {
        let g = grid(201, 0.005);
        let off = GwOffspring::poisson(1.0).unwrap();
        let table = solve_gw(&off, g).unwrap();
        let mut max_err = 0.0f64;
        for (j, t) in table.grid().t_points().iter().enumerate() {
            for (k, z) in table.grid().z_points().iter().enumerate() {
                let exact = oracle::pgw_phi(1.0, *z, *t).unwrap();
                max_err = max_err.max((table.phi(k, j) - exact).abs());
            }
        }
        assert!(max_err < 5e-4, "max error {max_err}");
    }

    #[test]
    fn r_regular_sandwich_and_t0() {
        let g = grid(101, 0.02);
        for r in [3usize, 6] {
            let star = solve_r_regular(r, g).unwrap();
            let inner = solve_dary_fixed_point(r - 1, g).unwrap();
            let eps = oracle::epsilon_d(r - 1);
            for j in 0..=g.n_steps() {
                for k in 0..g.m_z() {
                    let lo = (1.0 - eps) * inner.phi(k, j) - 1e-9;
                    let hi = inner.phi(k, j) + 1e-9;
                    let v = star.phi(k, j);
                    assert!(
                        v >= lo && v <= hi,
                        "r={r} j={j} k={k}: {v} not in [{lo},{hi}]"
                    );
                }
            }
            for (k, z) in g.z_points().iter().enumerate() {
                assert!((star.phi(k, 0) - (1.0 - z)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn solvent_probability_lookup() {
        let g = grid(51, 0.05);
        let table = solve_dary_fixed_point(2, g).unwrap();
        let (v, on) = solvent_probability(&table, 0.0);
        assert!(on && (v - 1.0).abs() < 1e-12);
        let (_, on) = solvent_probability(&table, 0.512);
        assert!(!on);
        let off = GwOffspring::poisson(1.0).unwrap();
        let table = solve_gw(&off, grid(201, 0.005)).unwrap();
        let (v, on) = solvent_probability(&table, 1.0);
        assert!(on);
        assert!((v - 2.0 / 3.0).abs() < 1e-3, "phi(0,1) = {v}");
    }

    #[test]
    fn richardson_order_two() {
        let off = GwOffspring::poisson(1.0).unwrap();
        let problem = Problem::Gw(&off);
        let (v1, e1) = refine_and_estimate_error(&problem, grid(51, 0.05)).unwrap();
        let (v2, e2) = refine_and_estimate_error(&problem, grid(101, 0.025)).unwrap();
        // halving the mesh divides the estimate by ~4
        let ratio = e1 / e2;
        assert!(ratio > 2.5 && ratio < 6.0, "refinement ratio {ratio}");
        // the estimate is an honest error indicator against the closed form
        let exact = oracle::pgw_phi(1.0, 0.0, 1.0).unwrap();
        assert!((v1 - exact).abs() <= 5.0 * e1 + 1e-9);
        assert!((v2 - exact).abs() <= 5.0 * e2 + 1e-9);
    }

    #[test]
    fn derivative_at_one_is_minus_one() {
        // dphi/dz at z=1 equals -1 (unit mean fortune), one-sided difference
        let g = grid(201, 0.01);
        let off = GwOffspring::poisson(1.5).unwrap();
        for table in [
            solve_dary_fixed_point(3, g).unwrap(),
            solve_gw(&off, g).unwrap(),
            solve_r_regular(4, g).unwrap(),
        ] {
            let m = g.m_z();
            for j in [0, g.n_steps() / 2, g.n_steps()] {
                let slope = (table.phi(m - 1, j) - table.phi(m - 2, j)) / g.dz();
                assert!((slope + 1.0).abs() < 0.02, "slope {slope}");
            }
        }
    }

    #[test]
    fn non_tree_rejected() {
        let cyc = from_edge_list(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert!(solve_tree_recursion(&cyc, 0, grid(11, 0.25)).is_err());
        let tree = dary_tree(2, 2).unwrap();
        assert!(solve_tree_recursion(&tree, 99, grid(11, 0.25)).is_err());
    }
}
