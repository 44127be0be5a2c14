//! The catalytic tape and the register views laid over it.
//!
//! A [`CatalyticTape`] is a fixed-length bit array whose initial content is
//! arbitrary and must be restored bit-for-bit when an algorithm finishes.
//! Algorithms never touch the raw bits directly; they view spans of the tape
//! as fixed-width registers through a [`RegisterFile`], which implements
//! arithmetic modulo `q` on registers of width `ℓ` using the decomposition
//! `value = a·q + b` (only the `b` part is ever changed).
//!
//! Registers are packed end-to-end from the file's base offset and are
//! little-endian within their span: bit `k` of a register's value lives at
//! tape bit `base + idx·width + k`.
//!
//! The small ordinary memory an algorithm uses is accounted for by a
//! [`WorkspaceMeter`].

use std::fmt;
use std::fmt::Write as _;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TapeError {
    #[error("register span [{start}, {end}) exceeds tape length {len}")]
    SpanOutOfBounds { start: usize, end: usize, len: usize },
    #[error("modulus {modulus} does not fit in {width}-bit registers")]
    ModulusTooLarge { modulus: u64, width: u32 },
    #[error("modulus must be at least 2, got {0}")]
    ModulusTooSmall(u64),
    #[error("register width {0} is not supported for this operation")]
    UnsupportedWidth(u32),
    #[error("register index {idx} out of range (file holds {count})")]
    IndexOutOfRange { idx: usize, count: usize },
    #[error("register {idx} holds {value}, which is not valid for modulus {modulus}")]
    InvalidRegister { idx: usize, value: u64, modulus: u64 },
    #[error("amount {amount} is not a residue modulo {modulus}")]
    AmountOutOfRange { amount: u64, modulus: u64 },
    #[error("source and destination register are both {0}")]
    SameRegister(usize),
    #[error("workspace release of {release} bits exceeds {in_use} bits in use")]
    OverRelease { release: u64, in_use: u64 },
    #[error("workspace budget of {budget} bits exceeded ({requested} bits requested)")]
    BudgetExceeded { budget: u64, requested: u64 },
}

pub type Result<T, E = TapeError> = std::result::Result<T, E>;

/// Initial content profiles used to exercise catalytic correctness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TapeProfile {
    Zeros,
    Ones,
    /// Uniformly random bits from a seeded ChaCha8 stream.
    Random(u64),
}

impl fmt::Display for TapeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TapeProfile::Zeros => f.write_str("zeros"),
            TapeProfile::Ones => f.write_str("ones"),
            TapeProfile::Random(seed) => write!(f, "random({seed})"),
        }
    }
}

/// SHA-256 of the tape length and contents.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct TapeDigest([u8; 32]);

impl TapeDigest {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Debug for TapeDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Display for TapeDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct CatalyticTape {
    words: Vec<u64>,
    len: usize,
}

impl fmt::Debug for CatalyticTape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CatalyticTape")
            .field("len", &self.len)
            .field("digest", &self.digest())
            .finish()
    }
}

#[inline]
fn low_mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl CatalyticTape {
    /// An all-zero tape of `len` bits.
    pub fn new(len: usize) -> Self {
        CatalyticTape {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn with_profile(len: usize, profile: TapeProfile) -> Self {
        let mut tape = Self::new(len);
        match profile {
            TapeProfile::Zeros => {}
            TapeProfile::Ones => tape.words.iter_mut().for_each(|w| *w = u64::MAX),
            TapeProfile::Random(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                tape.words.iter_mut().for_each(|w| *w = rng.next_u64());
            }
        }
        tape.clear_tail();
        tape
    }

    /// Builds a tape from raw little-endian words; bits past `len` are dropped.
    pub fn from_words(words: Vec<u64>, len: usize) -> Self {
        let mut words = words;
        words.resize(len.div_ceil(64), 0);
        let mut tape = CatalyticTape { words, len };
        tape.clear_tail();
        tape
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= low_mask(rem);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn bit(&self, idx: usize) -> bool {
        assert!(idx < self.len, "tape index {idx} out of range {}", self.len);
        (self.words[idx / 64] >> (idx % 64)) & 1 == 1
    }

    pub fn set_bit(&mut self, idx: usize, value: bool) {
        assert!(idx < self.len, "tape index {idx} out of range {}", self.len);
        let mask = 1u64 << (idx % 64);
        if value {
            self.words[idx / 64] |= mask;
        } else {
            self.words[idx / 64] &= !mask;
        }
    }

    /// Reads `len ≤ 64` bits starting at `offset`, little-endian.
    pub fn read_bits(&self, offset: usize, len: usize) -> u64 {
        debug_assert!(len <= 64);
        if len == 0 {
            return 0;
        }
        assert!(offset + len <= self.len, "read past end of tape");
        let word = offset / 64;
        let shift = offset % 64;
        let mut out = self.words[word] >> shift;
        if shift + len > 64 {
            out |= self.words[word + 1] << (64 - shift);
        }
        out & low_mask(len)
    }

    /// Writes the low `len ≤ 64` bits of `value` at `offset`; no other bit changes.
    pub fn write_bits(&mut self, offset: usize, len: usize, value: u64) {
        debug_assert!(len <= 64);
        if len == 0 {
            return;
        }
        assert!(offset + len <= self.len, "write past end of tape");
        let value = value & low_mask(len);
        let word = offset / 64;
        let shift = offset % 64;
        let lo_len = len.min(64 - shift);
        let lo_mask = low_mask(lo_len) << shift;
        self.words[word] = (self.words[word] & !lo_mask) | ((value << shift) & lo_mask);
        if lo_len < len {
            let hi_len = len - lo_len;
            let hi_mask = low_mask(hi_len);
            self.words[word + 1] = (self.words[word + 1] & !hi_mask) | (value >> lo_len);
        }
    }

    pub fn digest(&self) -> TapeDigest {
        let mut hasher = Sha256::new();
        hasher.update((self.len as u64).to_le_bytes());
        for w in &self.words {
            hasher.update(w.to_le_bytes());
        }
        let out = hasher.finalize();
        let mut bytes = [0u8; 32];
        bytes.copy_from_slice(&out);
        TapeDigest(bytes)
    }

    /// Debug dump: one line of 16 hex digits per 64 tape bits, most
    /// significant nibble first within each word.
    pub fn hex_dump(&self) -> String {
        let mut out = String::with_capacity(self.words.len() * 17);
        for w in &self.words {
            let _ = writeln!(out, "{w:016x}");
        }
        out
    }

    /// Index of the first bit where `self` and `other` differ.
    pub fn first_difference(&self, other: &CatalyticTape) -> Option<usize> {
        if self.len != other.len {
            return Some(self.len.min(other.len));
        }
        self.words
            .iter()
            .zip(&other.words)
            .position(|(a, b)| a != b)
            .map(|w| w * 64 + (self.words[w] ^ other.words[w]).trailing_zeros() as usize)
    }
}

/// Modulus of a register file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulus {
    /// `q = 2^width`; every register is valid and widths beyond 64 bits are allowed.
    PowerOfTwo,
    /// An explicit modulus `2 ≤ q ≤ 2^width`, for widths of at most 64 bits.
    Residue(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// Number of bits needed to hold a value in `[0, range)`; at least one.
pub fn bits_for_range(range: u128) -> u32 {
    if range <= 2 {
        1
    } else {
        128 - (range - 1).leading_zeros()
    }
}

/// A run of `count` registers of `width` bits each, packed from `base`.
#[derive(Debug)]
pub struct RegisterFile<'t> {
    tape: &'t mut CatalyticTape,
    base: usize,
    count: usize,
    width: u32,
    modulus: Modulus,
    multiplier: u64,
    /// `q·d`: registers holding a value below this are valid.
    valid_limit: u128,
}

impl<'t> RegisterFile<'t> {
    pub fn allocate(
        tape: &'t mut CatalyticTape,
        base: usize,
        count: usize,
        width: u32,
        modulus: Modulus,
    ) -> Result<Self> {
        if width == 0 {
            return Err(TapeError::UnsupportedWidth(0));
        }
        let end = count
            .checked_mul(width as usize)
            .and_then(|span| span.checked_add(base))
            .ok_or(TapeError::SpanOutOfBounds {
                start: base,
                end: usize::MAX,
                len: tape.len(),
            })?;
        if end > tape.len() {
            return Err(TapeError::SpanOutOfBounds {
                start: base,
                end,
                len: tape.len(),
            });
        }
        let (multiplier, valid_limit) = Self::layout_for(width, modulus)?;
        Ok(RegisterFile {
            tape,
            base,
            count,
            width,
            modulus,
            multiplier,
            valid_limit,
        })
    }

    /// Switches the file to a new modulus without touching the tape.
    pub fn reconfigure(&mut self, modulus: Modulus) -> Result<()> {
        let fresh = Self::layout_for(self.width, modulus)?;
        self.modulus = modulus;
        (self.multiplier, self.valid_limit) = fresh;
        Ok(())
    }

    fn layout_for(width: u32, modulus: Modulus) -> Result<(u64, u128)> {
        match modulus {
            Modulus::PowerOfTwo => Ok((1, u128::MAX)),
            Modulus::Residue(q) => {
                if q < 2 {
                    return Err(TapeError::ModulusTooSmall(q));
                }
                if width > 64 {
                    return Err(TapeError::UnsupportedWidth(width));
                }
                let full = 1u128 << width;
                if q as u128 > full {
                    return Err(TapeError::ModulusTooLarge { modulus: q, width });
                }
                let d = full / q as u128;
                Ok((d as u64, q as u128 * d))
            }
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    /// The largest `d` with `q·d ≤ 2^width` (1 for power-of-two files).
    pub fn multiplier(&self) -> u64 {
        self.multiplier
    }

    pub fn base(&self) -> usize {
        self.base
    }

    /// Total tape bits covered by the file.
    pub fn span_bits(&self) -> usize {
        self.count * self.width as usize
    }

    pub fn tape(&self) -> &CatalyticTape {
        self.tape
    }

    /// First tape bit of register `idx`.
    pub fn offset_of(&self, idx: usize) -> usize {
        self.base + idx * self.width as usize
    }

    /// Maps a tape bit back to `(register, bit within register)`.
    pub fn locate(&self, tape_bit: usize) -> Option<(usize, u32)> {
        if tape_bit < self.base {
            return None;
        }
        let rel = tape_bit - self.base;
        let idx = rel / self.width as usize;
        (idx < self.count).then(|| (idx, (rel % self.width as usize) as u32))
    }

    fn check_index(&self, idx: usize) -> Result<()> {
        if idx < self.count {
            Ok(())
        } else {
            Err(TapeError::IndexOutOfRange {
                idx,
                count: self.count,
            })
        }
    }

    fn limbs(&self) -> usize {
        (self.width as usize).div_ceil(64)
    }

    fn limb_len(&self, limb: usize) -> usize {
        (self.width as usize - 64 * limb).min(64)
    }

    /// Current value of a register of width ≤ 64.
    pub fn value(&self, idx: usize) -> Result<u64> {
        self.check_index(idx)?;
        if self.width > 64 {
            return Err(TapeError::UnsupportedWidth(self.width));
        }
        Ok(self.tape.read_bits(self.offset_of(idx), self.width as usize))
    }

    /// Reads `len ≤ 64` bits of register `idx` starting at bit `offset`.
    pub fn read_field(&self, idx: usize, offset: u32, len: u32) -> Result<u64> {
        self.check_index(idx)?;
        let len = len.min(self.width.saturating_sub(offset));
        Ok(self
            .tape
            .read_bits(self.offset_of(idx) + offset as usize, len as usize))
    }

    pub fn is_valid(&self, idx: usize) -> Result<bool> {
        match self.modulus {
            Modulus::PowerOfTwo => {
                self.check_index(idx)?;
                Ok(true)
            }
            Modulus::Residue(_) => Ok((self.value(idx)? as u128) < self.valid_limit),
        }
    }

    fn valid_value(&self, idx: usize, q: u64) -> Result<u64> {
        let value = self.value(idx)?;
        if (value as u128) < self.valid_limit {
            Ok(value)
        } else {
            Err(TapeError::InvalidRegister {
                idx,
                value,
                modulus: q,
            })
        }
    }

    /// The `b` part of a valid register's value `a·q + b`.
    ///
    /// For power-of-two files this is the whole value, so the width must be
    /// at most 64 bits.
    pub fn residue(&self, idx: usize) -> Result<u64> {
        match self.modulus {
            Modulus::PowerOfTwo => self.value(idx),
            Modulus::Residue(q) => Ok(self.valid_value(idx, q)? % q),
        }
    }

    /// Adds `amount` to the residue of `dst`, modulo `q`.
    pub fn reg_add_mod(&mut self, dst: usize, amount: u64) -> Result<()> {
        self.add_constant(dst, amount, Sign::Plus)
    }

    pub fn reg_sub_mod(&mut self, dst: usize, amount: u64) -> Result<()> {
        self.add_constant(dst, amount, Sign::Minus)
    }

    fn add_constant(&mut self, dst: usize, amount: u64, sign: Sign) -> Result<()> {
        self.check_index(dst)?;
        match self.modulus {
            Modulus::PowerOfTwo => {
                if self.width < 64 && amount >> self.width != 0 {
                    return Err(TapeError::AmountOutOfRange {
                        amount,
                        modulus: 1 << self.width,
                    });
                }
                self.wrapping_add_u64(dst, amount, sign);
                Ok(())
            }
            Modulus::Residue(q) => {
                if amount >= q {
                    return Err(TapeError::AmountOutOfRange { amount, modulus: q });
                }
                let value = self.valid_value(dst, q)?;
                let (a, b) = (value / q, value % q);
                let b = match sign {
                    Sign::Plus => ((b as u128 + amount as u128) % q as u128) as u64,
                    Sign::Minus => ((b as u128 + (q - amount) as u128) % q as u128) as u64,
                };
                self.write_value(dst, a * q + b);
                Ok(())
            }
        }
    }

    /// Edge push: `dst ← dst ± src` on residues; `src` is left unchanged.
    pub fn reg_add_reg(&mut self, dst: usize, src: usize, sign: Sign) -> Result<()> {
        self.check_index(dst)?;
        self.check_index(src)?;
        if dst == src {
            return Err(TapeError::SameRegister(dst));
        }
        match self.modulus {
            Modulus::PowerOfTwo => {
                let (dst_off, src_off) = (self.offset_of(dst), self.offset_of(src));
                let mut carry = 0u128;
                for limb in 0..self.limbs() {
                    let len = self.limb_len(limb);
                    let a = self.tape.read_bits(dst_off + 64 * limb, len) as u128;
                    let b = self.tape.read_bits(src_off + 64 * limb, len) as u128;
                    let modulus = 1u128 << len;
                    let (out, next) = match sign {
                        Sign::Plus => {
                            let sum = a + b + carry;
                            (sum % modulus, sum / modulus)
                        }
                        Sign::Minus => {
                            let sub = b + carry;
                            if a >= sub {
                                (a - sub, 0)
                            } else {
                                (a + modulus - sub, 1)
                            }
                        }
                    };
                    self.tape.write_bits(dst_off + 64 * limb, len, out as u64);
                    carry = next;
                }
                Ok(())
            }
            Modulus::Residue(q) => {
                let value = self.valid_value(dst, q)?;
                let src_residue = self.valid_value(src, q)? % q;
                let (a, b) = (value / q, value % q);
                let b = match sign {
                    Sign::Plus => ((b as u128 + src_residue as u128) % q as u128) as u64,
                    Sign::Minus => {
                        ((b as u128 + (q - src_residue) as u128) % q as u128) as u64
                    }
                };
                self.write_value(dst, a * q + b);
                Ok(())
            }
        }
    }

    fn write_value(&mut self, idx: usize, value: u64) {
        let off = self.offset_of(idx);
        self.tape.write_bits(off, self.width as usize, value);
    }

    /// Adds (or subtracts) `x` modulo `2^width`, carrying across limbs.
    fn wrapping_add_u64(&mut self, idx: usize, x: u64, sign: Sign) {
        let off = self.offset_of(idx);
        let mut carry = x as u128;
        for limb in 0..self.limbs() {
            if carry == 0 {
                break;
            }
            let len = self.limb_len(limb);
            let modulus = 1u128 << len;
            let a = self.tape.read_bits(off + 64 * limb, len) as u128;
            let step = carry % modulus;
            let (out, next) = match sign {
                Sign::Plus => {
                    let sum = a + step;
                    (sum % modulus, sum / modulus + carry / modulus)
                }
                Sign::Minus => {
                    if a >= step {
                        (a - step, carry / modulus)
                    } else {
                        (a + modulus - step, 1 + carry / modulus)
                    }
                }
            };
            self.tape.write_bits(off + 64 * limb, len, out as u64);
            carry = next;
        }
    }

    /// Adds `beta` to register `idx` modulo `2^width`, ignoring validity.
    pub fn shift(&mut self, idx: usize, beta: u64) -> Result<()> {
        self.check_index(idx)?;
        self.wrapping_add_u64(idx, beta, Sign::Plus);
        Ok(())
    }

    /// Inverse of [`RegisterFile::shift`].
    pub fn unshift(&mut self, idx: usize, beta: u64) -> Result<()> {
        self.check_index(idx)?;
        self.wrapping_add_u64(idx, beta, Sign::Minus);
        Ok(())
    }

    /// Shifts every register by `beta` modulo `2^width`.
    ///
    /// Shifting again by `2^width − beta` (or calling
    /// [`RegisterFile::unshift_all`]) restores the file exactly.
    pub fn shift_all(&mut self, beta: u64) {
        for idx in 0..self.count {
            self.wrapping_add_u64(idx, beta, Sign::Plus);
        }
    }

    pub fn unshift_all(&mut self, beta: u64) {
        for idx in 0..self.count {
            self.wrapping_add_u64(idx, beta, Sign::Minus);
        }
    }
}

/// What happens when a charge would exceed the workspace budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BudgetPolicy {
    /// The charge fails with [`TapeError::BudgetExceeded`].
    Fatal,
    /// The charge succeeds; the violation is logged and counted.
    #[default]
    Log,
}

/// Accounts for the ordinary (non-catalytic) memory an algorithm uses.
#[derive(Debug, Clone, Default)]
pub struct WorkspaceMeter {
    bits_in_use: u64,
    peak_bits: u64,
    budget: Option<u64>,
    policy: BudgetPolicy,
    violations: u64,
}

impl WorkspaceMeter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_budget(budget: u64, policy: BudgetPolicy) -> Self {
        WorkspaceMeter {
            budget: Some(budget),
            policy,
            ..Self::default()
        }
    }

    pub fn bits_in_use(&self) -> u64 {
        self.bits_in_use
    }

    pub fn peak_bits(&self) -> u64 {
        self.peak_bits
    }

    pub fn budget(&self) -> Option<u64> {
        self.budget
    }

    pub fn violations(&self) -> u64 {
        self.violations
    }

    pub fn charge(&mut self, bits: u64) -> Result<()> {
        let requested = self.bits_in_use + bits;
        if let Some(budget) = self.budget {
            if requested > budget {
                self.violations += 1;
                match self.policy {
                    BudgetPolicy::Fatal => {
                        return Err(TapeError::BudgetExceeded { budget, requested })
                    }
                    BudgetPolicy::Log => {
                        log::warn!("workspace budget {budget} exceeded: {requested} bits")
                    }
                }
            }
        }
        self.bits_in_use = requested;
        self.peak_bits = self.peak_bits.max(requested);
        Ok(())
    }

    pub fn release(&mut self, bits: u64) -> Result<()> {
        if bits > self.bits_in_use {
            return Err(TapeError::OverRelease {
                release: bits,
                in_use: self.bits_in_use,
            });
        }
        self.bits_in_use -= bits;
        Ok(())
    }

    /// Charges one scalar per entry, each sized to hold values in `[0, range)`.
    /// Returns the number of bits charged so the caller can release them.
    pub fn charge_vars(&mut self, ranges: &[u128]) -> Result<u64> {
        let bits = ranges.iter().map(|&r| bits_for_range(r) as u64).sum();
        self.charge(bits)?;
        Ok(bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tape_with_values(width: u32, values: &[u64]) -> CatalyticTape {
        let mut tape = CatalyticTape::new(width as usize * values.len());
        for (i, &v) in values.iter().enumerate() {
            tape.write_bits(i * width as usize, width as usize, v);
        }
        tape
    }

    #[test]
    fn power_of_two_modulus_has_multiplier_one() {
        let mut tape = CatalyticTape::new(64);
        let file = RegisterFile::allocate(&mut tape, 0, 4, 16, Modulus::Residue(1 << 16)).unwrap();
        assert_eq!(file.multiplier(), 1);
    }

    #[test]
    fn multiplier_is_floor_of_capacity_over_modulus() {
        let mut tape = CatalyticTape::new(16);
        let file = RegisterFile::allocate(&mut tape, 0, 4, 4, Modulus::Residue(5)).unwrap();
        assert_eq!(file.multiplier(), 3);
    }

    #[test]
    fn allocation_errors() {
        let mut tape = CatalyticTape::new(16);
        assert_eq!(
            RegisterFile::allocate(&mut tape, 0, 4, 4, Modulus::Residue(17)).unwrap_err(),
            TapeError::ModulusTooLarge {
                modulus: 17,
                width: 4
            }
        );
        assert!(matches!(
            RegisterFile::allocate(&mut tape, 4, 4, 4, Modulus::Residue(5)),
            Err(TapeError::SpanOutOfBounds { .. })
        ));
        assert_eq!(
            RegisterFile::allocate(&mut tape, 0, 1, 4, Modulus::Residue(1)).unwrap_err(),
            TapeError::ModulusTooSmall(1)
        );
    }

    #[test]
    fn allocation_leaves_tape_alone() {
        let mut tape = CatalyticTape::with_profile(100, TapeProfile::Random(3));
        let before = tape.digest();
        let _ = RegisterFile::allocate(&mut tape, 3, 8, 12, Modulus::Residue(7)).unwrap();
        assert_eq!(tape.digest(), before);
    }

    #[test]
    fn shift_wraps_modulo_width() {
        let mut tape = tape_with_values(4, &[13]);
        let mut file = RegisterFile::allocate(&mut tape, 0, 1, 4, Modulus::Residue(5)).unwrap();
        file.shift_all(5);
        assert_eq!(file.value(0).unwrap(), 2);
        file.shift_all(0);
        assert_eq!(file.value(0).unwrap(), 2);
        file.shift_all(16 - 5);
        assert_eq!(file.value(0).unwrap(), 13);
    }

    #[test]
    fn validity_against_q_times_d() {
        let mut tape = tape_with_values(4, &[14, 15]);
        let file = RegisterFile::allocate(&mut tape, 0, 2, 4, Modulus::Residue(5)).unwrap();
        assert!(file.is_valid(0).unwrap());
        assert!(!file.is_valid(1).unwrap());
        assert!(matches!(
            file.is_valid(2),
            Err(TapeError::IndexOutOfRange { idx: 2, count: 2 })
        ));
    }

    #[test]
    fn full_width_modulus_is_always_valid() {
        for v in 0..16 {
            let mut tape = tape_with_values(4, &[v]);
            let file = RegisterFile::allocate(&mut tape, 0, 1, 4, Modulus::Residue(16)).unwrap();
            assert!(file.is_valid(0).unwrap());
            let mut tape = tape_with_values(4, &[v]);
            let file = RegisterFile::allocate(&mut tape, 0, 1, 4, Modulus::PowerOfTwo).unwrap();
            assert!(file.is_valid(0).unwrap());
        }
    }

    #[test]
    fn add_mod_changes_only_the_residue() {
        let mut tape = tape_with_values(4, &[13, 15]);
        let mut file = RegisterFile::allocate(&mut tape, 0, 2, 4, Modulus::Residue(5)).unwrap();
        file.reg_add_mod(0, 4).unwrap();
        assert_eq!(file.value(0).unwrap(), 12);
        file.reg_add_mod(0, 0).unwrap();
        assert_eq!(file.value(0).unwrap(), 12);
        file.reg_sub_mod(0, 4).unwrap();
        assert_eq!(file.value(0).unwrap(), 13);
        assert!(matches!(
            file.reg_add_mod(1, 1),
            Err(TapeError::InvalidRegister { idx: 1, value: 15, .. })
        ));
        assert!(matches!(
            file.reg_add_mod(0, 5),
            Err(TapeError::AmountOutOfRange { .. })
        ));
    }

    #[test]
    fn edge_push_adds_source_residue() {
        let mut tape = tape_with_values(4, &[12, 8, 5]);
        let mut file = RegisterFile::allocate(&mut tape, 0, 3, 4, Modulus::Residue(5)).unwrap();
        file.reg_add_reg(0, 1, Sign::Plus).unwrap();
        assert_eq!(file.value(0).unwrap(), 10);
        assert_eq!(file.value(1).unwrap(), 8);
        // Residue 0 source leaves the destination alone.
        file.reg_add_reg(1, 2, Sign::Plus).unwrap();
        assert_eq!(file.value(1).unwrap(), 8);
        file.reg_add_reg(0, 1, Sign::Minus).unwrap();
        assert_eq!(file.value(0).unwrap(), 12);
        assert_eq!(
            file.reg_add_reg(1, 1, Sign::Plus).unwrap_err(),
            TapeError::SameRegister(1)
        );
    }

    #[test]
    fn wide_power_of_two_registers_carry_across_limbs() {
        let width = 130u32;
        let mut tape = CatalyticTape::new(2 * width as usize);
        // dst = 2^64 - 1, src = 1
        tape.write_bits(0, 64, u64::MAX);
        tape.write_bits(width as usize, 64, 1);
        let mut file = RegisterFile::allocate(&mut tape, 0, 2, width, Modulus::PowerOfTwo).unwrap();
        file.reg_add_reg(0, 1, Sign::Plus).unwrap();
        assert_eq!(file.read_field(0, 0, 64).unwrap(), 0);
        assert_eq!(file.read_field(0, 64, 64).unwrap(), 1);
        file.reg_add_reg(0, 1, Sign::Minus).unwrap();
        assert_eq!(file.read_field(0, 0, 64).unwrap(), u64::MAX);
        assert_eq!(file.read_field(0, 64, 64).unwrap(), 0);
        // 0 - 1 wraps to 2^130 - 1.
        file.reg_sub_mod(1, 1).unwrap();
        file.reg_sub_mod(1, 1).unwrap();
        assert_eq!(file.read_field(1, 0, 64).unwrap(), u64::MAX);
        assert_eq!(file.read_field(1, 64, 64).unwrap(), u64::MAX);
        assert_eq!(file.read_field(1, 128, 2).unwrap(), 3);
    }

    #[test]
    fn meter_tracks_peak_and_budget() {
        let mut meter = WorkspaceMeter::new();
        meter.charge(64).unwrap();
        meter.release(64).unwrap();
        assert_eq!(meter.bits_in_use(), 0);
        meter.charge(64).unwrap();
        meter.charge(64).unwrap();
        assert!(meter.peak_bits() >= 128);
        assert!(matches!(
            meter.release(200),
            Err(TapeError::OverRelease { .. })
        ));

        let mut strict = WorkspaceMeter::with_budget(100, BudgetPolicy::Fatal);
        assert_eq!(
            strict.charge(128).unwrap_err(),
            TapeError::BudgetExceeded {
                budget: 100,
                requested: 128
            }
        );
        let mut lenient = WorkspaceMeter::with_budget(100, BudgetPolicy::Log);
        lenient.charge(128).unwrap();
        assert_eq!(lenient.violations(), 1);
    }

    #[test]
    fn bits_for_range_rounds_up() {
        assert_eq!(bits_for_range(0), 1);
        assert_eq!(bits_for_range(2), 1);
        assert_eq!(bits_for_range(3), 2);
        assert_eq!(bits_for_range(16), 4);
        assert_eq!(bits_for_range(17), 5);
    }

    #[test]
    fn hex_dump_has_one_line_per_word() {
        let mut tape = CatalyticTape::new(70);
        tape.write_bits(0, 8, 0xab);
        tape.set_bit(64, true);
        assert_eq!(tape.hex_dump(), "00000000000000ab\n0000000000000001\n");
    }

    #[test]
    fn profiles_fill_as_named() {
        let ones = CatalyticTape::with_profile(70, TapeProfile::Ones);
        assert!((0..70).all(|i| ones.bit(i)));
        let zeros = CatalyticTape::with_profile(70, TapeProfile::Zeros);
        assert!((0..70).all(|i| !zeros.bit(i)));
        let a = CatalyticTape::with_profile(300, TapeProfile::Random(9));
        let b = CatalyticTape::with_profile(300, TapeProfile::Random(9));
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), zeros.digest());
    }
}
