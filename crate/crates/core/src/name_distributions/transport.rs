//! Balanced transportation problem solved by successive shortest paths with
//! node potentials. Dense bipartite graph, integer supplies and costs, so the
//! optimum is exact and independent of platform.

const INF: i128 = i128::MAX / 4;

/// Minimum of Σ cost[i][j] f[i][j] over nonnegative f with row sums `supply`
/// and column sums `demand`. Totals must agree; costs must be nonnegative.
pub fn min_cost_transport(supply: &[u128], demand: &[u128], cost: &[Vec<i64>]) -> i128 {
    let a = supply.len();
    let b = demand.len();
    debug_assert_eq!(supply.iter().sum::<u128>(), demand.iter().sum::<u128>());
    debug_assert!(cost.len() == a && cost.iter().all(|r| r.len() == b));
    if a == 0 || b == 0 {
        return 0;
    }

    let mut rem_a: Vec<i128> = supply.iter().map(|&s| s as i128).collect();
    let mut rem_b: Vec<i128> = demand.iter().map(|&d| d as i128).collect();
    let mut flow = vec![vec![0i128; b]; a];
    // potentials keep every residual reduced cost nonnegative; the source
    // stays at potential 0
    let mut pot_l = vec![0i128; a];
    let mut pot_r = vec![0i128; b];
    let mut pot_t: i128 = 0;
    let mut total: i128 = 0;

    let mut dist_l = vec![INF; a];
    let mut dist_r = vec![INF; b];
    let mut done_l = vec![false; a];
    let mut done_r = vec![false; b];
    // right node j is reached from left node prev_r[j]; left node i is reached
    // from right node prev_l[i] along a reverse edge, or from the source
    let mut prev_r = vec![usize::MAX; b];
    let mut prev_l = vec![usize::MAX; a];

    loop {
        dist_r.fill(INF);
        done_l.fill(false);
        done_r.fill(false);
        prev_l.fill(usize::MAX);
        prev_r.fill(usize::MAX);
        for i in 0..a {
            // reduced cost of source -> i is -pot_l[i], which is 0 while i has supply
            dist_l[i] = if rem_a[i] > 0 { -pot_l[i] } else { INF };
        }
        let mut sink: Option<(usize, i128)> = None;
        loop {
            let mut best = INF;
            let mut pick: Option<(bool, usize)> = None;
            for i in 0..a {
                if !done_l[i] && dist_l[i] < best {
                    best = dist_l[i];
                    pick = Some((true, i));
                }
            }
            for j in 0..b {
                if !done_r[j] && dist_r[j] < best {
                    best = dist_r[j];
                    pick = Some((false, j));
                }
            }
            let Some((left, u)) = pick else { break };
            if matches!(sink, Some((_, d)) if best >= d) {
                break;
            }
            if left {
                done_l[u] = true;
                let du = dist_l[u] + pot_l[u];
                let row = &cost[u];
                for j in 0..b {
                    if done_r[j] {
                        continue;
                    }
                    let nd = du + row[j] as i128 - pot_r[j];
                    if nd < dist_r[j] {
                        dist_r[j] = nd;
                        prev_r[j] = u;
                    }
                }
            } else {
                done_r[u] = true;
                let du = dist_r[u] + pot_r[u];
                if rem_b[u] > 0 {
                    let through = du - pot_t;
                    if sink.is_none_or(|(_, d)| through < d) {
                        sink = Some((u, through));
                    }
                }
                for i in 0..a {
                    if done_l[i] || flow[i][u] == 0 {
                        continue;
                    }
                    let nd = du - cost[i][u] as i128 - pot_l[i];
                    if nd < dist_l[i] {
                        dist_l[i] = nd;
                        prev_l[i] = u;
                    }
                }
            }
        }
        let Some((end, d_t)) = sink else { break };

        for i in 0..a {
            pot_l[i] += if done_l[i] { dist_l[i].min(d_t) } else { d_t };
        }
        for j in 0..b {
            pot_r[j] += if done_r[j] { dist_r[j].min(d_t) } else { d_t };
        }
        pot_t += d_t;

        let mut bottleneck = rem_b[end];
        let mut j = end;
        let start = loop {
            let i = prev_r[j];
            if prev_l[i] == usize::MAX {
                break i;
            }
            let jp = prev_l[i];
            bottleneck = bottleneck.min(flow[i][jp]);
            j = jp;
        };
        bottleneck = bottleneck.min(rem_a[start]);
        debug_assert!(bottleneck > 0);

        let mut j = end;
        loop {
            let i = prev_r[j];
            flow[i][j] += bottleneck;
            total += bottleneck * cost[i][j] as i128;
            if prev_l[i] == usize::MAX {
                break;
            }
            let jp = prev_l[i];
            flow[i][jp] -= bottleneck;
            total -= bottleneck * cost[i][jp] as i128;
            j = jp;
        }
        rem_a[start] -= bottleneck;
        rem_b[end] -= bottleneck;
    }
    debug_assert!(rem_b.iter().all(|&r| r == 0));
    total
}
