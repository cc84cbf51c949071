use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Fixed transport latency between a producer and a consumer.
///
/// Payloads leave in insertion order exactly `delay_us` after they were pushed.
#[derive(Debug, Clone)]
pub struct DelayLine<T> {
    entries: VecDeque<(u64, T)>,
    delay_us: u64,
    last_us: Option<u64>,
    held: Option<T>,
}

impl<T> DelayLine<T> {
    pub fn new(delay_us: u64) -> Self {
        Self {
            entries: VecDeque::new(),
            delay_us,
            last_us: None,
            held: None,
        }
    }

    pub fn delay_us(&self) -> u64 {
        self.delay_us
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn advance_clock(&mut self, now_us: u64) -> Result<()> {
        if let Some(last_us) = self.last_us {
            if now_us < last_us {
                return Err(Error::TimeRegression { last_us, now_us });
            }
        }
        self.last_us = Some(now_us);
        Ok(())
    }

    pub fn push(&mut self, now_us: u64, payload: T) -> Result<()> {
        self.advance_clock(now_us)?;
        self.entries.push_back((now_us + self.delay_us, payload));
        Ok(())
    }

    /// Moves every payload whose release time is `<= now_us` into `out`.
    pub fn pop_into(&mut self, now_us: u64, out: &mut Vec<T>) -> Result<()> {
        self.advance_clock(now_us)?;
        while self.entries.front().is_some_and(|(release, _)| *release <= now_us) {
            let (_, payload) = self.entries.pop_front().expect("front checked");
            out.push(payload);
        }
        Ok(())
    }

    pub fn pop(&mut self, now_us: u64) -> Result<Vec<T>> {
        let mut out = Vec::new();
        self.pop_into(now_us, &mut out)?;
        Ok(out)
    }
}

impl<T: Clone> DelayLine<T> {
    /// Zero-order-hold read: the most recently released payload, if any has been released yet.
    pub fn hold(&mut self, now_us: u64) -> Result<Option<T>> {
        self.advance_clock(now_us)?;
        while self.entries.front().is_some_and(|(release, _)| *release <= now_us) {
            self.held = self.entries.pop_front().map(|(_, p)| p);
        }
        Ok(self.held.clone())
    }
}
