use std::collections::BTreeMap;

use thiserror::Error;

use super::{param_address, Arg, ControlMessage, PARAM_NAMES};

/// Current values of every subscribable address.
///
/// Scalar parameters hold one value; the parameter-vector address holds one
/// per component.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParameterCatalog {
    values: BTreeMap<String, Vec<f32>>,
}

impl ParameterCatalog {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The 15 scalar parameters, all zero.
    pub fn canonical() -> Self {
        let mut cat = Self::default();
        for name in PARAM_NAMES {
            cat.register(param_address(name), vec![0.0]);
        }
        cat
    }

    pub fn register(&mut self, address: impl Into<String>, initial: Vec<f32>) {
        self.values.insert(address.into(), initial);
    }

    pub fn contains(&self, address: &str) -> bool {
        self.values.contains_key(address)
    }

    pub fn get(&self, address: &str) -> Option<&[f32]> {
        self.values.get(address).map(Vec::as_slice)
    }

    /// Updates a registered address; unknown addresses are ignored.
    pub fn set(&mut self, address: &str, value: f32) {
        if let Some(slot) = self.values.get_mut(address) {
            slot.clear();
            slot.push(value);
        }
    }

    pub fn set_vector(&mut self, address: &str, values: &[f32]) {
        if let Some(slot) = self.values.get_mut(address) {
            slot.clear();
            slot.extend_from_slice(values);
        }
    }

    pub fn addresses(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

/// Requested report rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interval {
    /// Report on every control tick.
    EveryTick,
    /// Report every `n` milliseconds (`n > 0`).
    Millis(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subscription {
    pub address: String,
    pub interval: Interval,
    /// Time of the last report, in ms.
    pub last_sent: Option<u64>,
    next_due: Option<u64>,
}

impl Subscription {
    fn due(&self, now: u64) -> bool {
        match (self.interval, self.next_due) {
            (Interval::EveryTick, _) | (_, None) => true,
            (Interval::Millis(_), Some(due)) => now >= due,
        }
    }

    fn mark_sent(&mut self, now: u64) {
        self.last_sent = Some(now);
        if let Interval::Millis(p) = self.interval {
            let p = u64::from(p);
            // advance from the schedule, not the send time, so a period that
            // is not a multiple of the tick keeps its long-run rate
            let next = self.next_due.map_or(now + p, |due| due + p);
            self.next_due = Some(if next <= now { now + p } else { next });
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RequestError {
    #[error("unknown address {0}")]
    UnknownAddress(String),
    #[error("{0}: expected one int32 interval argument")]
    WrongArgs(String),
}

impl RequestError {
    /// Error reply sent back to the requesting client.
    pub fn to_reply(&self) -> ControlMessage {
        let address = match self {
            RequestError::UnknownAddress(a) | RequestError::WrongArgs(a) => a.as_str(),
        };
        ControlMessage::error(self.to_string(), address)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RequestOutcome {
    Subscribed(Interval),
    /// Same address and interval as an existing subscription.
    Unchanged,
    Removed,
    /// Negative interval for an address with no subscription.
    NotSubscribed,
}

/// One client's subscriptions, ordered by address.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Registry {
    subs: BTreeMap<String, Subscription>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.subs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subs.is_empty()
    }

    pub fn get(&self, address: &str) -> Option<&Subscription> {
        self.subs.get(address)
    }

    pub fn clear(&mut self) {
        self.subs.clear();
    }

    /// Applies `<address> <interval ms>`.
    pub fn apply_request(
        &mut self,
        msg: &ControlMessage,
        catalog: &ParameterCatalog,
    ) -> Result<RequestOutcome, RequestError> {
        if !catalog.contains(&msg.address) {
            return Err(RequestError::UnknownAddress(msg.address.clone()));
        }
        let interval = match msg.args.as_slice() {
            [Arg::Int(v)] => *v,
            _ => return Err(RequestError::WrongArgs(msg.address.clone())),
        };
        if interval < 0 {
            return Ok(match self.subs.remove(&msg.address) {
                Some(_) => RequestOutcome::Removed,
                None => RequestOutcome::NotSubscribed,
            });
        }
        let interval = if interval == 0 {
            Interval::EveryTick
        } else {
            Interval::Millis(interval as u32)
        };
        match self.subs.get_mut(&msg.address) {
            Some(sub) if sub.interval == interval => Ok(RequestOutcome::Unchanged),
            Some(sub) => {
                sub.interval = interval;
                sub.next_due = match (interval, sub.last_sent) {
                    (Interval::Millis(p), Some(last)) => Some(last + u64::from(p)),
                    _ => None,
                };
                Ok(RequestOutcome::Subscribed(interval))
            }
            None => {
                self.subs.insert(
                    msg.address.clone(),
                    Subscription {
                        address: msg.address.clone(),
                        interval,
                        last_sent: None,
                        next_due: None,
                    },
                );
                Ok(RequestOutcome::Subscribed(interval))
            }
        }
    }

    /// Reports for every subscription due at `now` (ms).
    pub fn tick(&mut self, catalog: &ParameterCatalog, now: u64) -> Vec<ControlMessage> {
        let mut out = Vec::new();
        for sub in self.subs.values_mut() {
            if !sub.due(now) {
                continue;
            }
            let Some(values) = catalog.get(&sub.address) else {
                continue;
            };
            out.push(ControlMessage::new(
                sub.address.clone(),
                values.iter().map(|&v| Arg::Float(v)).collect(),
            ));
            sub.mark_sent(now);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(addr: &str, ms: i32) -> ControlMessage {
        ControlMessage::int(param_address(addr), ms)
    }

    #[test]
    fn request_semantics() {
        let cat = ParameterCatalog::canonical();
        let mut reg = Registry::new();
        assert_eq!(
            reg.apply_request(&request("Amplitude", 30), &cat),
            Ok(RequestOutcome::Subscribed(Interval::Millis(30)))
        );
        assert_eq!(reg.apply_request(&request("Amplitude", 30), &cat), Ok(RequestOutcome::Unchanged));
        assert_eq!(
            reg.apply_request(&request("Z", 0), &cat),
            Ok(RequestOutcome::Subscribed(Interval::EveryTick))
        );
        assert_eq!(reg.len(), 2);
        assert_eq!(reg.apply_request(&request("Z", -1), &cat), Ok(RequestOutcome::Removed));
        assert_eq!(reg.apply_request(&request("Z", -1), &cat), Ok(RequestOutcome::NotSubscribed));
        assert!(reg.get(&param_address("Z")).is_none());
    }

    #[test]
    fn request_errors() {
        let cat = ParameterCatalog::canonical();
        let mut reg = Registry::new();
        let err = reg.apply_request(&request("Nope", 30), &cat).unwrap_err();
        assert!(matches!(err, RequestError::UnknownAddress(_)));
        assert_eq!(err.to_reply().address, super::super::ERROR);
        let msg = ControlMessage::float(param_address("Z"), 30.0);
        assert!(matches!(reg.apply_request(&msg, &cat), Err(RequestError::WrongArgs(_))));
        let msg = ControlMessage::new(param_address("Z"), vec![]);
        assert!(matches!(reg.apply_request(&msg, &cat), Err(RequestError::WrongArgs(_))));
    }

    #[test]
    fn thirty_ms_with_five_ms_tick() {
        let cat = ParameterCatalog::canonical();
        let mut reg = Registry::new();
        reg.apply_request(&request("Amplitude", 30), &cat).unwrap();
        let mut times = Vec::new();
        for now in (0..=1000).step_by(5) {
            if !reg.tick(&cat, now).is_empty() {
                times.push(now);
            }
        }
        assert!(times.len() == 33 || times.len() == 34, "{}", times.len());
        assert!(times.windows(2).all(|w| w[1] - w[0] == 30 || w[1] - w[0] == 35));
    }

    #[test]
    fn every_tick_and_empty() {
        let mut cat = ParameterCatalog::canonical();
        let mut reg = Registry::new();
        assert!(reg.tick(&cat, 0).is_empty());
        reg.apply_request(&request("Z", 0), &cat).unwrap();
        cat.set(&param_address("Z"), 0.3);
        let mut count = 0;
        for i in 0..100 {
            let out = reg.tick(&cat, i * 5);
            assert_eq!(out, vec![ControlMessage::float(param_address("Z"), 0.3)]);
            count += out.len();
        }
        assert_eq!(count, 100);
    }

    #[test]
    fn period_not_multiple_of_tick_keeps_rate() {
        let cat = ParameterCatalog::canonical();
        let mut reg = Registry::new();
        reg.apply_request(&request("X", 7), &cat).unwrap();
        let n: usize = (0..=2000).step_by(5).map(|now| reg.tick(&cat, now).len()).sum();
        let ideal = 2000 / 7;
        assert!((n as i64 - ideal as i64).abs() <= 1, "{n} vs {ideal}");
    }

    #[test]
    fn vector_values_become_float_args() {
        let mut cat = ParameterCatalog::empty();
        cat.register(super::super::PARAM_VECTOR, vec![0.0; 3]);
        cat.set_vector(super::super::PARAM_VECTOR, &[1.0, 440.0, 2.0]);
        let mut reg = Registry::new();
        reg.apply_request(&ControlMessage::int(super::super::PARAM_VECTOR, 100), &cat).unwrap();
        let out = reg.tick(&cat, 0);
        assert_eq!(out[0].args, vec![Arg::Float(1.0), Arg::Float(440.0), Arg::Float(2.0)]);
    }
}
