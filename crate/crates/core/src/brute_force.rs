//! Exhaustive grid-search scheduler used as a verification oracle.
//!
//! Every device is restricted to the grid `{0, h, 2h, ...} ∩ [0, d_max)` plus
//! its cap `d_max`. The search returns the grid point with the highest
//! surplus. Instead of enumerating the product grid point by point, it runs an
//! exact max-plus dynamic program keyed on (lattice index sum, set of devices
//! at their cap): the payment only depends on total consumption, so the best
//! utility for each reachable total is all that is needed. The result is the
//! same grid maximum an explicit enumeration would find; no concavity or
//! threshold structure is used.

use crate::error::{Error, Result};
use crate::schedule::{Schedule, Zone};
use crate::tariff::TariffParams;
use crate::utility::DeviceSet;

pub const MAX_ORACLE_DEVICES: usize = 3;
const MAX_LATTICE_POINTS: usize = 20_000_000;

const AT_CAP: i32 = -1;

/// Best grid point of `max U(d) - P(Σd - r)`.
///
/// The returned schedule is labelled by the sign of its net consumption and
/// never carries a shadow price.
pub fn brute_force_schedule(devices: &DeviceSet, params: &TariffParams, r: f64, step: f64) -> Result<Schedule> {
    let m = devices.len();
    if m > MAX_ORACLE_DEVICES {
        return Err(Error::invalid(
            "devices",
            format!("brute force oracle supports at most {MAX_ORACLE_DEVICES} devices, got {m}"),
        ));
    }
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::invalid("step", format!("must be finite and > 0, got {step}")));
    }
    if !r.is_finite() || r < 0.0 {
        return Err(Error::invalid("r", format!("renewable output must be finite and >= 0, got {r}")));
    }

    // Lattice points strictly below the cap, per device, and their utilities.
    let lattices: Vec<Vec<f64>> = devices
        .iter()
        .map(|dev| {
            let count = (dev.d_max() / step).ceil() as usize;
            (0..count)
                .map(|k| k as f64 * step)
                .take_while(|&d| d < dev.d_max())
                .map(|d| dev.value(d))
                .collect()
        })
        .collect();
    let lattice_total: usize = lattices.iter().map(|l| l.len()).sum();
    if lattice_total > MAX_LATTICE_POINTS {
        return Err(Error::invalid("step", format!("grid too fine: {lattice_total} lattice points")));
    }
    let caps: Vec<f64> = devices.iter().map(|dev| dev.d_max()).collect();
    let cap_utility: Vec<f64> = devices.iter().map(|dev| dev.value(dev.d_max())).collect();

    let masks = 1usize << m;
    // best[mask][ksum]; choices[i][mask][ksum] = lattice index or AT_CAP chosen for device i.
    let mut width = 1usize;
    let mut best = vec![vec![f64::NEG_INFINITY; width]; masks];
    best[0][0] = 0.0;
    let mut choices: Vec<Vec<Vec<i32>>> = Vec::with_capacity(m);

    for (i, lattice) in lattices.iter().enumerate() {
        let next_width = width + lattice.len().saturating_sub(1);
        let mut next = vec![vec![f64::NEG_INFINITY; next_width]; masks];
        let mut choice = vec![vec![i32::MIN; next_width]; masks];
        for mask in 0..masks {
            for ks in 0..width {
                let base = best[mask][ks];
                if base == f64::NEG_INFINITY {
                    continue;
                }
                let row = &mut next[mask][ks..];
                let pick = &mut choice[mask][ks..];
                for (k, &u) in lattice.iter().enumerate() {
                    let v = base + u;
                    if v > row[k] {
                        row[k] = v;
                        pick[k] = k as i32;
                    }
                }
                let capped = mask | (1 << i);
                let v = base + cap_utility[i];
                if v > next[capped][ks] {
                    next[capped][ks] = v;
                    choice[capped][ks] = AT_CAP;
                }
            }
        }
        best = next;
        choices.push(choice);
        width = next_width;
    }

    let mut winner: Option<(usize, usize, f64)> = None;
    for (mask, row) in best.iter().enumerate() {
        let capped_total: f64 = (0..m).filter(|i| mask & (1 << i) != 0).map(|i| caps[i]).sum();
        for (ks, &u) in row.iter().enumerate() {
            if u == f64::NEG_INFINITY {
                continue;
            }
            let total = ks as f64 * step + capped_total;
            let objective = u - params.charge(total - r);
            if winner.is_none_or(|(_, _, w)| objective > w) {
                winner = Some((mask, ks, objective));
            }
        }
    }
    let (mut mask, mut ks, _) = winner.expect("the all-zero bundle is always reachable");

    let mut consumption = vec![0.0; m];
    for i in (0..m).rev() {
        match choices[i][mask][ks] {
            AT_CAP => {
                consumption[i] = caps[i];
                mask &= !(1 << i);
            }
            k if k >= 0 => {
                consumption[i] = k as f64 * step;
                ks -= k as usize;
            }
            _ => unreachable!("back-pointer missing for a reachable state"),
        }
    }

    let net = consumption.iter().sum::<f64>() - r;
    let payment = params.charge(net);
    let surplus = devices.total_utility(&consumption) - payment;
    Ok(Schedule {
        consumption,
        zone: if net >= 0.0 { Zone::NetConsumption } else { Zone::NetProduction },
        mu_star: None,
        net,
        surplus,
        payment,
    })
}
