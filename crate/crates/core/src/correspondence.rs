//! Per-state character back-mapping.
//!
//! `C_t[i]` is the position in state `t - 1` of the character at position `i`
//! in state `t`, or `-1` when the character was inserted at `t`. Every array
//! carries one extra end sentinel so positions equal to the snapshot length
//! remain mappable.

use serde::{Deserialize, Serialize};

use crate::error::CorrespondenceError;
use crate::session::{EditEvent, EditKind};

/// Half-open code-point range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CharRange {
    pub start: usize,
    pub end: usize,
}

impl CharRange {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end, "inverted range {start}..{end}");
        CharRange { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    /// `other ⊆ self`, using the bound comparison of the tracking algorithm.
    pub fn contains_range(&self, other: &CharRange) -> bool {
        other.start >= self.start && other.end <= self.end
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index < self.end
    }

    pub fn overlaps(&self, other: &CharRange) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl std::fmt::Display for CharRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{},{})", self.start, self.end)
    }
}

pub const NO_CHAR: i32 = -1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrespondenceArray {
    pub state_index: usize,
    values: Vec<i32>,
}

impl CorrespondenceArray {
    /// Builds `C_t` for `event` applied to a snapshot of `prev_len` code points.
    pub fn build(event: &EditEvent, prev_len: usize) -> Result<Self, CorrespondenceError> {
        Self::for_edit(0, event.kind, event.index, event.len(), prev_len)
    }

    pub fn for_edit(
        state_index: usize,
        kind: EditKind,
        index: usize,
        len: usize,
        prev_len: usize,
    ) -> Result<Self, CorrespondenceError> {
        let oob = CorrespondenceError::OutOfBounds {
            index,
            state: state_index,
            len: prev_len,
        };
        let values: Vec<i32> = match kind {
            EditKind::Insert => {
                if index > prev_len {
                    return Err(oob);
                }
                (0..index as i32)
                    .chain(std::iter::repeat(NO_CHAR).take(len))
                    .chain(index as i32..=prev_len as i32)
                    .collect()
            }
            EditKind::Delete => {
                if index + len > prev_len {
                    return Err(oob);
                }
                (0..index as i32).chain((index + len) as i32..=prev_len as i32).collect()
            }
        };
        Ok(CorrespondenceArray { state_index, values })
    }

    pub fn with_state(mut self, state_index: usize) -> Self {
        self.state_index = state_index;
        self
    }

    pub fn values(&self) -> &[i32] {
        &self.values
    }

    /// Length of the snapshot this array describes (excludes the sentinel).
    pub fn snapshot_len(&self) -> usize {
        self.values.len() - 1
    }

    /// Previous-state position of `index`, `None` for inserted characters.
    pub fn get(&self, index: usize) -> Option<usize> {
        match self.values.get(index) {
            Some(&v) if v >= 0 => Some(v as usize),
            _ => None,
        }
    }

    /// Maps a range one state back. Start and end follow the first and last
    /// surviving characters inside the range; an empty range follows the
    /// first surviving position at or after it. `None` when every character
    /// in a non-empty range is new.
    pub fn map_range(&self, range: CharRange) -> Option<CharRange> {
        let v = &self.values;
        if range.is_empty() {
            let p = v[range.start..].iter().find(|&&x| x >= 0)?;
            return Some(CharRange::new(*p as usize, *p as usize));
        }
        let first = v[range.start..range.end].iter().find(|&&x| x >= 0)?;
        let last = v[range.start..range.end].iter().rev().find(|&&x| x >= 0)?;
        Some(CharRange::new(*first as usize, *last as usize + 1))
    }
}

/// The arrays for every state of a session.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Correspondences {
    arrays: Vec<CorrespondenceArray>,
}

impl Correspondences {
    /// Arrays for every event replayed from the empty file; `arrays[0]`
    /// maps state 0 onto the empty file.
    pub fn from_events(events: &[EditEvent]) -> Result<Self, CorrespondenceError> {
        let mut arrays = Vec::with_capacity(events.len());
        let mut len = 0usize;
        for (t, ev) in events.iter().enumerate() {
            let a = CorrespondenceArray::for_edit(t, ev.kind, ev.index, ev.len(), len)?;
            len = a.snapshot_len();
            arrays.push(a);
        }
        Ok(Correspondences { arrays })
    }

    pub fn len(&self) -> usize {
        self.arrays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrays.is_empty()
    }

    pub fn array(&self, state: usize) -> Result<&CorrespondenceArray, CorrespondenceError> {
        self.arrays
            .get(state)
            .ok_or(CorrespondenceError::MissingArray { state })
    }

    pub fn arrays(&self) -> &[CorrespondenceArray] {
        &self.arrays
    }

    fn check(&self, from: usize, to: usize) -> Result<(), CorrespondenceError> {
        if to >= from {
            return Err(CorrespondenceError::BadDirection { from, to });
        }
        if from >= self.arrays.len() {
            return Err(CorrespondenceError::MissingArray { state: from });
        }
        Ok(())
    }

    /// Maps `range` at state `from` back to state `to < from`: the hull of
    /// the positions its surviving characters have at `to`. An empty range
    /// maps to the position of the first surviving character at or after it
    /// (the end sentinel always survives). `Ok(None)` means no character of
    /// a non-empty range survives.
    pub fn chain_range(
        &self,
        range: CharRange,
        from: usize,
        to: usize,
    ) -> Result<Option<CharRange>, CorrespondenceError> {
        self.check(from, to)?;
        let len = self.arrays[from].snapshot_len();
        if range.end > len || range.start > range.end {
            return Err(CorrespondenceError::OutOfBounds {
                index: range.end,
                state: from,
                len,
            });
        }
        let hi = if range.is_empty() { len + 1 } else { range.end };
        let mut pos: Vec<i32> = (range.start as i32..hi as i32).collect();
        for state in (to + 1..=from).rev() {
            let a = &self.arrays[state].values;
            for p in pos.iter_mut() {
                if *p >= 0 {
                    *p = a[*p as usize];
                }
            }
        }
        let mut alive = pos.iter().filter(|&&p| p >= 0).map(|&p| p as usize);
        if range.is_empty() {
            let p = alive.next().expect("sentinel survives");
            return Ok(Some(CharRange::new(p, p)));
        }
        let Some(first) = alive.next() else { return Ok(None) };
        let last = alive.last().unwrap_or(first);
        Ok(Some(CharRange::new(first, last + 1)))
    }

    /// Position at state `to` of the character at `index` in state `from`.
    pub fn chain_char(&self, index: usize, from: usize, to: usize) -> Result<Option<usize>, CorrespondenceError> {
        self.check(from, to)?;
        let len = self.arrays[from].snapshot_len();
        if index >= len {
            return Err(CorrespondenceError::OutOfBounds {
                index,
                state: from,
                len,
            });
        }
        let mut p = index;
        for state in (to + 1..=from).rev() {
            match self.arrays[state].get(p) {
                Some(q) => p = q,
                None => return Ok(None),
            }
        }
        Ok(Some(p))
    }

    pub fn char_exists_at(&self, index: usize, from: usize, to: usize) -> Result<bool, CorrespondenceError> {
        Ok(self.chain_char(index, from, to)?.is_some())
    }

    /// For every character of state `from`, its position at `to`, or `-1`.
    pub fn backward_map(&self, from: usize, to: usize) -> Result<Vec<i32>, CorrespondenceError> {
        let len = self.array(from)?.snapshot_len();
        let mut pos: Vec<i32> = (0..len as i32).collect();
        if from == to {
            return Ok(pos);
        }
        self.check(from, to)?;
        for state in (to + 1..=from).rev() {
            let a = &self.arrays[state].values;
            for p in pos.iter_mut() {
                if *p >= 0 {
                    *p = a[*p as usize];
                }
            }
        }
        Ok(pos)
    }

    /// Inverse of [`Self::backward_map`]: for every character of state `to`,
    /// its position at the later state `from`, or `-1` if it does not survive.
    pub fn forward_map(&self, from: usize, to: usize) -> Result<Vec<i32>, CorrespondenceError> {
        let back = self.backward_map(from, to)?;
        let to_len = self.array(to)?.snapshot_len();
        let mut fwd = vec![NO_CHAR; to_len];
        for (i, &p) in back.iter().enumerate() {
            if p >= 0 {
                fwd[p as usize] = i as i32;
            }
        }
        Ok(fwd)
    }
}
