//! The profiled operator bodies and their supporting state.
//!
//! Each body has a bit-exact contract so measurements mean the same thing
//! on every host:
//!
//! - `crc`: CRC-32, reflected, polynomial 0xEDB88320, over the full buffer
//! - `checksum`: RFC 1071 internet checksum (16-bit one's-complement sum)
//! - `htons`: byte-swap of the 16-bit field at offset 12 (EtherType
//!   position), written back
//! - `hash`: lookup of a 13-byte flow key (bytes 4..17) in a pre-populated
//!   open-addressing table of 65,536 slots
//! - `printf`: formatted line (operator name + counter) written to stderr,
//!   one unbuffered system call per packet
//! - `ringlog`: the same formatted line appended to a pre-allocated
//!   in-memory ring buffer, no system call

/// Byte offset of the 16-bit field the `htons` operator swaps.
pub const HTONS_OFFSET: usize = 12;
/// Flow keys are read from this window of every packet buffer.
pub const FLOW_KEY_OFFSET: usize = 4;
pub const FLOW_KEY_LEN: usize = 13;
/// Slot count of the flow table (power of two).
pub const FLOW_TABLE_SLOTS: usize = 65_536;
/// Fraction of slots pre-populated before measurement.
pub const FLOW_TABLE_LOAD: f64 = 0.60;
/// Smallest legal packet buffer: every operator's fixed offsets fit.
pub const MIN_PACKET_SIZE: u32 = 18;

/// Builds the byte-at-a-time lookup table for the reflected 0xEDB88320
/// polynomial.
pub fn crc32_table() -> [u32; 256] {
    let mut table = [0u32; 256];
    for (i, entry) in table.iter_mut().enumerate() {
        let mut v = i as u32;
        for _ in 0..8 {
            v = if v & 1 != 0 { 0xEDB8_8320 ^ (v >> 1) } else { v >> 1 };
        }
        *entry = v;
    }
    table
}

/// CRC-32 (reflected, init/xorout 0xFFFFFFFF) over the whole buffer.
#[inline]
pub fn crc32(table: &[u32; 256], data: &[u8]) -> u32 {
    let mut crc = 0xFFFF_FFFFu32;
    for &byte in data {
        crc = table[((crc ^ u32::from(byte)) & 0xFF) as usize] ^ (crc >> 8);
    }
    !crc
}

/// RFC 1071 internet checksum: one's-complement sum of 16-bit big-endian
/// words (odd trailing byte padded with zero), complemented.
#[inline]
pub fn internet_checksum(data: &[u8]) -> u16 {
    let mut sum: u32 = 0;
    let mut words = data.chunks_exact(2);
    for word in &mut words {
        sum += u32::from(u16::from_be_bytes([word[0], word[1]]));
    }
    if let [last] = words.remainder() {
        sum += u32::from(u16::from_be_bytes([*last, 0]));
    }
    while sum >> 16 != 0 {
        sum = (sum & 0xFFFF) + (sum >> 16);
    }
    !(sum as u16)
}

/// Reads the 16-bit field at [`HTONS_OFFSET`], swaps its bytes, writes it
/// back, and returns the swapped value.
#[inline]
pub fn htons_field(buf: &mut [u8]) -> u16 {
    let swapped = u16::from_be_bytes([buf[HTONS_OFFSET], buf[HTONS_OFFSET + 1]]).swap_bytes();
    buf[HTONS_OFFSET..HTONS_OFFSET + 2].copy_from_slice(&swapped.to_be_bytes());
    swapped
}

/// Extracts the fixed flow-key window from a packet buffer.
#[inline]
pub fn flow_key(buf: &[u8]) -> [u8; FLOW_KEY_LEN] {
    let mut key = [0u8; FLOW_KEY_LEN];
    key.copy_from_slice(&buf[FLOW_KEY_OFFSET..FLOW_KEY_OFFSET + FLOW_KEY_LEN]);
    key
}

#[derive(Clone)]
struct Slot {
    occupied: bool,
    key: [u8; FLOW_KEY_LEN],
    value: u64,
}

/// Open-addressing hash table with linear probing, sized for flow keys.
///
/// Kept below full occupancy by construction, so probes always terminate.
pub struct FlowTable {
    slots: Vec<Slot>,
    mask: usize,
    occupied: usize,
}

impl FlowTable {
    pub fn new() -> Self {
        Self {
            slots: vec![
                Slot {
                    occupied: false,
                    key: [0; FLOW_KEY_LEN],
                    value: 0,
                };
                FLOW_TABLE_SLOTS
            ],
            mask: FLOW_TABLE_SLOTS - 1,
            occupied: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.occupied
    }

    pub fn is_empty(&self) -> bool {
        self.occupied == 0
    }

    // FNV-1a, 64-bit.
    #[inline]
    fn hash(key: &[u8; FLOW_KEY_LEN]) -> u64 {
        let mut h = 0xCBF2_9CE4_8422_2325u64;
        for &b in key {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x1000_0000_01B3);
        }
        h
    }

    pub fn insert(&mut self, key: [u8; FLOW_KEY_LEN], value: u64) {
        assert!(self.occupied < self.slots.len(), "flow table full");
        let mut idx = (Self::hash(&key) as usize) & self.mask;
        loop {
            let slot = &mut self.slots[idx];
            if !slot.occupied {
                slot.occupied = true;
                slot.key = key;
                slot.value = value;
                self.occupied += 1;
                return;
            }
            if slot.key == key {
                slot.value = value;
                return;
            }
            idx = (idx + 1) & self.mask;
        }
    }

    #[inline]
    pub fn lookup(&self, key: &[u8; FLOW_KEY_LEN]) -> Option<u64> {
        let mut idx = (Self::hash(key) as usize) & self.mask;
        loop {
            let slot = &self.slots[idx];
            if !slot.occupied {
                return None;
            }
            if slot.key == *key {
                return Some(slot.value);
            }
            idx = (idx + 1) & self.mask;
        }
    }
}

impl Default for FlowTable {
    fn default() -> Self {
        Self::new()
    }
}

/// Pre-allocated byte ring. Appends never allocate or call into the OS.
pub struct RingLog {
    data: Vec<u8>,
    cursor: usize,
}

impl RingLog {
    pub fn with_capacity(capacity: usize) -> Self {
        assert!(capacity > 0);
        Self {
            data: vec![0; capacity],
            cursor: 0,
        }
    }

    /// Appends `bytes` (shorter than the capacity), wrapping at the end.
    #[inline]
    pub fn append(&mut self, bytes: &[u8]) {
        let cap = self.data.len();
        debug_assert!(bytes.len() <= cap);
        let end = self.cursor + bytes.len();
        if end <= cap {
            self.data[self.cursor..end].copy_from_slice(bytes);
            self.cursor = if end == cap { 0 } else { end };
        } else {
            let head = cap - self.cursor;
            self.data[self.cursor..].copy_from_slice(&bytes[..head]);
            let tail = bytes.len() - head;
            self.data[..tail].copy_from_slice(&bytes[head..]);
            self.cursor = tail;
        }
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }
}

/// Formats `name SP counter NL` into a stack buffer without allocating;
/// returns the line length. Shared by `printf` and `ringlog` so the two
/// differ only in where the line goes.
#[inline]
pub fn format_log_line(out: &mut [u8; 64], name: &[u8], counter: u64) -> usize {
    debug_assert!(name.len() + 22 <= out.len());
    out[..name.len()].copy_from_slice(name);
    let mut n = name.len();
    out[n] = b' ';
    n += 1;

    let mut digits = [0u8; 20];
    let mut value = counter;
    let mut count = 0;
    loop {
        digits[count] = b'0' + (value % 10) as u8;
        value /= 10;
        count += 1;
        if value == 0 {
            break;
        }
    }
    for i in (0..count).rev() {
        out[n] = digits[i];
        n += 1;
    }
    out[n] = b'\n';
    n + 1
}
