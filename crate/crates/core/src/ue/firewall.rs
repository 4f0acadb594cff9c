//! Firewalls, insulated regions and the interval predicates over the event
//! history.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::kernel::history::{EventHistory, EventName, EventTag};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FirewallSet {
    pub max_epoch: u64,
    pub pairs: BTreeSet<(u64, u64)>,
}

impl FirewallSet {
    pub fn insulated(&self) -> BTreeSet<u64> {
        self.pairs.iter().flat_map(|&(l, r)| l..=r).collect()
    }

    pub fn in_region(&self, e: u64) -> bool {
        self.pairs.iter().any(|&(l, r)| l <= e && e <= r)
    }
}

/// Whether (fwl, fwr) bounds an insulated region under `history`.
pub fn is_firewall_pair(history: &EventHistory, fwl: u64, fwr: u64) -> bool {
    if fwl == 0 || fwl > fwr {
        return false;
    }
    let key = |e| history.contains(EventName::leaked_key(e));
    let token = |e| history.contains(EventName::leaked_token(e));
    (fwl..=fwr).all(|e| !key(e)) && !token(fwl) && !token(fwr + 1) && (fwl + 1..=fwr).all(token)
}

/// Every firewall pair with fwl ≤ fwr ≤ max_epoch, by exhaustive search.
pub fn compute_firewalls(history: &EventHistory, max_epoch: u64) -> FirewallSet {
    let mut pairs = BTreeSet::new();
    for l in 1..=max_epoch {
        for r in l..=max_epoch {
            if is_firewall_pair(history, l, r) {
                pairs.insert((l, r));
            }
        }
    }
    FirewallSet { max_epoch, pairs }
}

/// Epoch in which slot i first leaked: the last epoch announced before the
/// leak event.
pub fn leak_epoch(history: &EventHistory, slot: u64) -> Option<u64> {
    let at = history.position(EventName::leaked_data(slot))?;
    history.entries()[..at]
        .iter()
        .filter(|e| e.tag == EventTag::Epoch)
        .map(|e| e.index)
        .max()
}

/// Slot i leaked during an epoch outside every insulated region. Region
/// membership is inclusive of both firewalls; regions are computed up to the
/// current epoch.
pub fn compromised(history: &EventHistory, slot: u64) -> bool {
    match leak_epoch(history, slot) {
        Some(e) => !compute_firewalls(history, history.current_epoch()).in_region(e),
        None => false,
    }
}

/// All slots other than i were declared insecure by the environment.
pub fn only(history: &EventHistory, slot: u64, n: u64) -> bool {
    (1..=n).filter(|&j| j != slot).all(|j| history.contains(EventName::insec(j)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Predicates {
    pub compromised: bool,
    pub only: bool,
}

pub fn evaluate_predicates(history: &EventHistory, slot: u64, n: u64) -> Predicates {
    Predicates { compromised: compromised(history, slot), only: only(history, slot, n) }
}

/// The guarantee for slot k applies to this history: the interval opened
/// and has not closed.
pub fn inside_interval(history: &EventHistory, slot: u64, n: u64) -> bool {
    let p = evaluate_predicates(history, slot, n);
    p.only && !p.compromised
}
