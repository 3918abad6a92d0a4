//! User-to-gNB association under per-gNB capacity limits.
//!
//! Costs are always minimised. In exposure mode the cost of a link is the
//! SAR-weighted transmit power the user would need on it; in rate mode it is
//! the negated achievable rate, so both objectives share the same solver.
//!
//! The greedy solver sends every user to its cheapest gNB and then repairs
//! overloads one user at a time, always picking the move with the smallest
//! cost increase among users of overloaded gNBs and gNBs with free room.

use serde::{Deserialize, Serialize};

use crate::channel::{path_loss, required_power, ul_rate};
use crate::error::{Error, Result};
use crate::exposure::{allocate_power, PowerPolicy};
use crate::geometry::Point3;
use crate::params::{Scenario, SimParams, User};

/// Default cap on exhaustively enumerated candidates.
pub const ENUMERATION_BUDGET: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Objective {
    /// Minimise the exposure index.
    MinExposure,
    /// Maximise the sum uplink rate.
    MaxRate,
}

/// Which link a cost refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkDirection {
    Uplink,
    /// Downlink exposure proxy: SAR_DL times the downlink power the gNB must
    /// spend on that user.
    Downlink,
}

/// Turns a (user, gNB position) pair into a scalar cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub objective: Objective,
    pub policy: PowerPolicy,
    pub direction: LinkDirection,
}

impl CostModel {
    pub fn uplink(objective: Objective, policy: PowerPolicy) -> Self {
        Self {
            objective,
            policy,
            direction: LinkDirection::Uplink,
        }
    }

    pub fn downlink() -> Self {
        Self {
            objective: Objective::MinExposure,
            policy: PowerPolicy::PrimalRateTarget,
            direction: LinkDirection::Downlink,
        }
    }

    pub fn link_cost(&self, user: &User, gnb: &Point3, params: &SimParams) -> Result<f64> {
        let loss = path_loss(&user.position, gnb, params)?;
        Ok(match (self.direction, self.objective) {
            (LinkDirection::Downlink, _) => {
                params.sar_dl * required_power(user.rate_req_dl, loss, params)
            }
            (LinkDirection::Uplink, Objective::MinExposure) => {
                user.sar_ul * allocate_power(user, loss, &self.policy, params)
            }
            (LinkDirection::Uplink, Objective::MaxRate) => {
                -ul_rate(allocate_power(user, loss, &self.policy, params), loss, params)
            }
        })
    }

    /// Costs of every user towards one gNB position.
    pub fn column(&self, users: &[User], gnb: &Point3, params: &SimParams) -> Result<Vec<f64>> {
        users.iter().map(|u| self.link_cost(u, gnb, params)).collect()
    }

    pub fn matrix(&self, users: &[User], gnbs: &[Point3], params: &SimParams) -> Result<CostMatrix> {
        let cols = gnbs
            .iter()
            .map(|g| self.column(users, g, params))
            .collect::<Result<Vec<_>>>()?;
        Ok(CostMatrix::from_columns(users.len(), &cols))
    }
}

/// Dense row-major users × gNBs cost table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    users: usize,
    gnbs: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(users: usize, gnbs: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), users * gnbs, "cost matrix shape mismatch");
        Self { users, gnbs, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let gnbs = rows.first().map_or(0, Vec::len);
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), gnbs, data)
    }

    pub fn from_columns(users: usize, cols: &[Vec<f64>]) -> Self {
        let gnbs = cols.len();
        let mut data = vec![0.0; users * gnbs];
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), users);
            for (k, &c) in col.iter().enumerate() {
                data[k * gnbs + j] = c;
            }
        }
        Self { users, gnbs, data }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn gnbs(&self) -> usize {
        self.gnbs
    }

    pub fn get(&self, user: usize, gnb: usize) -> f64 {
        self.data[user * self.gnbs + gnb]
    }

    pub fn row(&self, user: usize) -> &[f64] {
        &self.data[user * self.gnbs..(user + 1) * self.gnbs]
    }
}

/// A feasible assignment of users to gNBs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Association {
    /// Serving gNB per user.
    pub serving: Vec<usize>,
    /// Users per gNB.
    pub load: Vec<usize>,
    pub capacity: Vec<usize>,
    pub costs: CostMatrix,
    /// Per non-BS gNB: total cost saved by its users relative to the BS.
    pub tuav_gain: Vec<f64>,
    /// Number of repair moves made.
    pub moves: usize,
}

impl Association {
    /// Wraps a given assignment, deriving loads and gains from `costs`.
    pub fn from_serving(serving: Vec<usize>, capacity: &[usize], costs: CostMatrix) -> Self {
        Self::build(serving, capacity, costs, 0)
    }

    fn build(serving: Vec<usize>, capacity: &[usize], costs: CostMatrix, moves: usize) -> Self {
        let mut load = vec![0; costs.gnbs()];
        for &j in &serving {
            load[j] += 1;
        }
        let mut tuav_gain = vec![0.0; costs.gnbs().saturating_sub(1)];
        for (k, &j) in serving.iter().enumerate() {
            if j > 0 {
                tuav_gain[j - 1] += costs.get(k, 0) - costs.get(k, j);
            }
        }
        Self {
            serving,
            load,
            capacity: capacity.to_vec(),
            costs,
            tuav_gain,
            moves,
        }
    }

    /// Sum of the chosen link costs.
    pub fn objective(&self) -> f64 {
        self.serving
            .iter()
            .enumerate()
            .map(|(k, &j)| self.costs.get(k, j))
            .sum()
    }

    pub fn users_of(&self, gnb: usize) -> Vec<usize> {
        self.serving
            .iter()
            .enumerate()
            .filter(|(_, &j)| j == gnb)
            .map(|(k, _)| k)
            .collect()
    }

    /// Checks one server per user and every load within capacity.
    pub fn validate(&self) -> Result<()> {
        let mut load = vec![0; self.capacity.len()];
        for (k, &j) in self.serving.iter().enumerate() {
            if j >= self.capacity.len() {
                return Err(Error::Infeasible(format!("user {k} served by unknown gNB {j}")));
            }
            load[j] += 1;
        }
        for (j, (&l, &c)) in load.iter().zip(&self.capacity).enumerate() {
            if l != self.load[j] {
                return Err(Error::Infeasible(format!("load bookkeeping of gNB {j} is stale")));
            }
            if l > c {
                return Err(Error::Infeasible(format!("gNB {j} holds {l} users over capacity {c}")));
            }
        }
        Ok(())
    }
}

fn check_capacity(users: usize, capacity: &[usize]) -> Result<()> {
    let total: usize = capacity.iter().sum();
    if total < users {
        return Err(Error::Infeasible(format!(
            "{users} users exceed the total capacity of {total}"
        )));
    }
    Ok(())
}

/// Cheapest-first association followed by overload repair.
pub fn greedy_assign(costs: CostMatrix, capacity: &[usize]) -> Result<Association> {
    assert_eq!(capacity.len(), costs.gnbs());
    check_capacity(costs.users(), capacity)?;
    let mut serving: Vec<usize> = (0..costs.users())
        .map(|k| {
            let row = costs.row(k);
            let mut best = 0;
            for j in 1..row.len() {
                if row[j] < row[best] {
                    best = j;
                }
            }
            best
        })
        .collect();
    let mut load = vec![0usize; costs.gnbs()];
    for &j in &serving {
        load[j] += 1;
    }

    let mut moves = 0;
    loop {
        let overloaded: Vec<bool> = load.iter().zip(capacity).map(|(l, c)| l > c).collect();
        if !overloaded.contains(&true) {
            break;
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for (k, &from) in serving.iter().enumerate() {
            if !overloaded[from] {
                continue;
            }
            for to in 0..costs.gnbs() {
                if load[to] >= capacity[to] {
                    continue;
                }
                let increment = costs.get(k, to) - costs.get(k, from);
                if best.is_none_or(|(b, _, _)| increment < b) {
                    best = Some((increment, k, to));
                }
            }
        }
        let (_, k, to) = best.ok_or_else(|| {
            Error::Infeasible("no gNB has room for the overflow users".into())
        })?;
        load[serving[k]] -= 1;
        load[to] += 1;
        serving[k] = to;
        moves += 1;
    }
    Ok(Association::build(serving, capacity, costs, moves))
}

/// Exhaustive search for the cheapest feasible association.
pub fn brute_force_assign(costs: CostMatrix, capacity: &[usize], budget: f64) -> Result<Association> {
    assert_eq!(capacity.len(), costs.gnbs());
    check_capacity(costs.users(), capacity)?;
    let (n_users, n_gnbs) = (costs.users(), costs.gnbs());
    let size = (n_gnbs as f64).powi(n_users as i32);
    if size > budget {
        return Err(Error::BudgetExceeded { size, budget });
    }
    let mut current = vec![0usize; n_users];
    let mut load = vec![0usize; n_gnbs];
    load[0] = n_users;
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        if load.iter().zip(capacity).all(|(l, c)| l <= c) {
            let total: f64 = current.iter().enumerate().map(|(k, &j)| costs.get(k, j)).sum();
            if best.as_ref().is_none_or(|(b, _)| total < *b) {
                best = Some((total, current.clone()));
            }
        }
        // Odometer step, last user fastest.
        let mut k = n_users;
        loop {
            if k == 0 {
                let (_, serving) = best.expect("a feasible assignment exists");
                return Ok(Association::build(serving, capacity, costs, 0));
            }
            k -= 1;
            load[current[k]] -= 1;
            if current[k] + 1 < n_gnbs {
                current[k] += 1;
                load[current[k]] += 1;
                break;
            }
            current[k] = 0;
            load[0] += 1;
        }
    }
}

/// Users, capacities and cost model of one association instance, with the
/// BS position fixed and the cell positions left free.
#[derive(Debug, Clone)]
pub struct AssociationProblem<'a> {
    pub users: &'a [User],
    pub bs: Point3,
    /// BS first, then one entry per cell.
    pub capacity: Vec<usize>,
    pub model: CostModel,
    pub params: &'a SimParams,
}

impl<'a> AssociationProblem<'a> {
    pub fn cells(&self) -> usize {
        self.capacity.len() - 1
    }

    pub fn column(&self, position: &Point3) -> Result<Vec<f64>> {
        self.model.column(self.users, position, self.params)
    }

    pub fn bs_column(&self) -> Result<Vec<f64>> {
        self.column(&self.bs)
    }

    /// Greedy association from precomputed columns (BS first).
    pub fn assign_columns(&self, columns: &[Vec<f64>]) -> Result<Association> {
        greedy_assign(CostMatrix::from_columns(self.users.len(), columns), &self.capacity)
    }

    /// Greedy association with the cells at `cells`.
    pub fn associate(&self, cells: &[Point3]) -> Result<Association> {
        let mut columns = Vec::with_capacity(cells.len() + 1);
        columns.push(self.bs_column()?);
        for c in cells {
            columns.push(self.column(c)?);
        }
        self.assign_columns(&columns)
    }

    pub fn brute_force(&self, cells: &[Point3], budget: f64) -> Result<Association> {
        let gnbs: Vec<Point3> = std::iter::once(self.bs).chain(cells.iter().copied()).collect();
        let costs = self.model.matrix(self.users, &gnbs, self.params)?;
        brute_force_assign(costs, &self.capacity, budget)
    }
}

fn scenario_costs(
    scenario: &Scenario,
    gnb_positions: &[Point3],
    objective: Objective,
    policy: PowerPolicy,
) -> Result<(CostMatrix, Vec<usize>)> {
    let users = scenario.active_users();
    let model = CostModel::uplink(objective, policy);
    let costs = model.matrix(&users, gnb_positions, &scenario.params)?;
    Ok((costs, scenario.capacities()))
}

/// Greedy uplink association of the scenario's active users.
pub fn greedy_associate(
    scenario: &Scenario,
    gnb_positions: &[Point3],
    objective: Objective,
    policy: PowerPolicy,
) -> Result<Association> {
    let (costs, capacity) = scenario_costs(scenario, gnb_positions, objective, policy)?;
    greedy_assign(costs, &capacity)
}

/// Exhaustive uplink association of the scenario's active users.
pub fn brute_force_associate(
    scenario: &Scenario,
    gnb_positions: &[Point3],
    objective: Objective,
    policy: PowerPolicy,
) -> Result<Association> {
    let (costs, capacity) = scenario_costs(scenario, gnb_positions, objective, policy)?;
    brute_force_assign(costs, &capacity, ENUMERATION_BUDGET)
}

/// Uniformly random feasible association.
pub fn random_assign<R: rand::Rng + ?Sized>(
    costs: CostMatrix,
    capacity: &[usize],
    rng: &mut R,
) -> Result<Association> {
    check_capacity(costs.users(), capacity)?;
    let mut load = vec![0usize; costs.gnbs()];
    let mut serving = Vec::with_capacity(costs.users());
    for _ in 0..costs.users() {
        let open: Vec<usize> = (0..costs.gnbs()).filter(|&j| load[j] < capacity[j]).collect();
        let j = open[rng.random_range(0..open.len())];
        load[j] += 1;
        serving.push(j);
    }
    Ok(Association::build(serving, capacity, costs, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_by_two() -> CostMatrix {
        CostMatrix::from_rows(&[vec![5.0, 1.0], vec![4.0, 2.0]])
    }

    #[test]
    fn repair_moves_cheapest_user() {
        let a = greedy_assign(two_by_two(), &[2, 1]).unwrap();
        assert_eq!(a.serving, vec![1, 0]);
        assert_eq!(a.objective(), 5.0);
        assert_eq!(a.moves, 1);
        assert_eq!(a.load, vec![1, 1]);
        assert_eq!(a.tuav_gain, vec![4.0]);
        a.validate().unwrap();
    }

    #[test]
    fn brute_force_matches_small_instance() {
        let a = brute_force_assign(two_by_two(), &[2, 1], ENUMERATION_BUDGET).unwrap();
        assert_eq!(a.objective(), 5.0);
        // The three feasible assignments cost 5, 7 and 9.
        let mut all = Vec::new();
        for s0 in 0..2 {
            for s1 in 0..2 {
                if (s0 == 1) as usize + (s1 == 1) as usize <= 1 {
                    all.push(two_by_two().get(0, s0) + two_by_two().get(1, s1));
                }
            }
        }
        all.sort_by(f64::total_cmp);
        assert_eq!(all, vec![5.0, 7.0, 9.0]);
    }

    #[test]
    fn bs_only_puts_everyone_on_bs() {
        let costs = CostMatrix::from_rows(&[vec![3.0], vec![1.0], vec![2.0]]);
        let a = greedy_assign(costs, &[3]).unwrap();
        assert_eq!(a.serving, vec![0, 0, 0]);
        assert!(a.tuav_gain.is_empty());
    }

    #[test]
    fn ample_capacity_needs_no_repair() {
        let costs = CostMatrix::from_rows(&[vec![3.0, 1.0, 2.0], vec![1.0, 4.0, 0.5]]);
        let a = greedy_assign(costs, &[2, 2, 2]).unwrap();
        assert_eq!(a.serving, vec![1, 2]);
        assert_eq!(a.moves, 0);
    }

    #[test]
    fn ties_go_to_lowest_gnb() {
        let costs = CostMatrix::from_rows(&[vec![2.0, 1.0, 1.0]]);
        assert_eq!(greedy_assign(costs, &[1, 1, 1]).unwrap().serving, vec![1]);
    }

    #[test]
    fn insufficient_capacity_is_error() {
        assert!(matches!(
            greedy_assign(two_by_two(), &[1, 0]),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn brute_force_budget_guard() {
        let rows = vec![vec![1.0; 4]; 12];
        let err = brute_force_assign(CostMatrix::from_rows(&rows), &[12; 4], 1e6).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn single_user_takes_best_gnb() {
        let costs = CostMatrix::from_rows(&[vec![3.0, 0.5, 2.0]]);
        let a = brute_force_assign(costs, &[1, 1, 1], ENUMERATION_BUDGET).unwrap();
        assert_eq!(a.serving, vec![1]);
    }

    #[test]
    fn random_assign_is_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let costs = CostMatrix::from_rows(&vec![vec![1.0, 2.0, 3.0]; 6]);
        let a = random_assign(costs, &[2, 2, 2], &mut rng).unwrap();
        a.validate().unwrap();
        assert_eq!(a.load, vec![2, 2, 2]);
    }

    #[test]
    fn rate_costs_are_negated_rates() {
        let p = SimParams::default();
        let u = User {
            id: 0,
            position: Point3::new(100.0, 0.0, 0.0),
            usage: crate::params::Usage::Data,
            active: true,
            rate_req_ul: 50e6,
            rate_req_dl: 100e6,
            sar_ul: p.sar_data,
        };
        let pol = PowerPolicy::dual(1e-3).unwrap();
        let m = CostModel::uplink(Objective::MaxRate, pol);
        let g = Point3::new(0.0, 0.0, 25.0);
        let cost = m.link_cost(&u, &g, &p).unwrap();
        let loss = path_loss(&u.position, &g, &p).unwrap();
        let rate = ul_rate((1e-3 / p.sar_data).min(p.p_max), loss, &p);
        assert!(((cost + rate) / rate).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>)> {
            (1usize..=5, 1usize..=3).prop_flat_map(|(k, j)| {
                (
                    proptest::collection::vec(proptest::collection::vec(0.0f64..10.0, j), k),
                    proptest::collection::vec(0usize..=3, j - 1),
                )
                    .prop_map(move |(rows, mut caps)| {
                        caps.insert(0, k);
                        (rows, caps)
                    })
            })
        }

        proptest! {
            #[test]
            fn greedy_feasible_and_above_oracle((rows, caps) in instance()) {
                let costs = CostMatrix::from_rows(&rows);
                let g = greedy_assign(costs.clone(), &caps).unwrap();
                g.validate().unwrap();
                prop_assert!(g.moves <= rows.len());
                let b = brute_force_assign(costs, &caps, ENUMERATION_BUDGET).unwrap();
                b.validate().unwrap();
                prop_assert!(b.objective() <= g.objective() + 1e-12);
            }

            #[test]
            fn greedy_never_worse_than_all_on_bs((rows, caps) in instance()) {
                let costs = CostMatrix::from_rows(&rows);
                let all_bs: f64 = rows.iter().map(|r| r[0]).sum();
                let g = greedy_assign(costs, &caps).unwrap();
                prop_assert!(g.objective() <= all_bs + 1e-12);
            }
        }
    }
}
