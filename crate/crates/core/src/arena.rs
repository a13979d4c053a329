//! Byte-level bump allocator backing node operands and payloads.
//!
//! Storage is a list of word-aligned blocks. Allocation bumps an offset in
//! the current block; when a request does not fit, the allocator moves on to
//! a retained block that can hold it or reserves a new block twice the size
//! of the current one. Nothing ever moves once allocated, so a [`Region`]
//! stays valid until the arena is recovered or truncated below it.

/// Size of the first block reserved by [`Arena::new`].
pub const DEFAULT_BLOCK_BYTES: usize = 64 * 1024;

const ALIGN: usize = 8;
const WORD: usize = std::mem::size_of::<u64>();

#[inline]
fn align_up(len: usize) -> usize {
    (len + ALIGN - 1) & !(ALIGN - 1)
}

/// A contiguous allocation inside one arena block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Region {
    block: u32,
    offset: u32,
    len: u32,
}

impl Region {
    pub const EMPTY: Region = Region {
        block: 0,
        offset: 0,
        len: 0,
    };

    pub fn block(&self) -> usize {
        self.block as usize
    }

    /// Byte offset of the region within its block.
    pub fn offset(&self) -> usize {
        self.offset as usize
    }

    /// Usable length in bytes.
    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of 64-bit words the region holds.
    pub fn words(&self) -> usize {
        self.len as usize / WORD
    }
}

/// Arena position captured by [`Arena::mark`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArenaMark {
    block: usize,
    offset: usize,
    used: usize,
}

impl ArenaMark {
    pub fn used_bytes(&self) -> usize {
        self.used
    }
}

#[derive(Debug)]
pub struct Arena {
    blocks: Vec<Box<[u64]>>,
    current: usize,
    next_offset: usize,
    used: usize,
    initial_block_bytes: usize,
}

impl Default for Arena {
    fn default() -> Self {
        Self::new()
    }
}

impl Arena {
    pub fn new() -> Self {
        Self::with_block_size(DEFAULT_BLOCK_BYTES)
    }

    /// Creates an arena whose first block holds `bytes` bytes (rounded up to
    /// a multiple of 8, minimum 8).
    pub fn with_block_size(bytes: usize) -> Self {
        let initial = align_up(bytes.max(ALIGN));
        Arena {
            blocks: vec![new_block(initial)],
            current: 0,
            next_offset: 0,
            used: 0,
            initial_block_bytes: initial,
        }
    }

    fn block_bytes(&self, index: usize) -> usize {
        self.blocks[index].len() * WORD
    }

    /// Allocates `len` bytes at an 8-byte aligned offset.
    pub fn alloc_bytes(&mut self, len: usize) -> Region {
        let padded = align_up(len);
        if padded == 0 {
            return Region {
                block: self.current as u32,
                offset: self.next_offset as u32,
                len: 0,
            };
        }
        if self.next_offset + padded > self.block_bytes(self.current) {
            self.advance(padded);
        }
        let region = Region {
            block: self.current as u32,
            offset: self.next_offset as u32,
            len: len as u32,
        };
        self.next_offset += padded;
        self.used += padded;
        region
    }

    fn advance(&mut self, padded: usize) {
        let retained =
            (self.current + 1..self.blocks.len()).find(|&b| self.block_bytes(b) >= padded);
        self.current = match retained {
            Some(b) => b,
            None => {
                let size = padded.max(2 * self.block_bytes(self.current));
                self.blocks.push(new_block(size));
                self.blocks.len() - 1
            }
        };
        self.next_offset = 0;
    }

    /// Allocates a region and fills it with `words`.
    pub fn alloc_words(&mut self, words: &[u64]) -> Region {
        let region = self.alloc_bytes(words.len() * WORD);
        if !words.is_empty() {
            self.words_mut(region).copy_from_slice(words);
        }
        region
    }

    pub fn alloc_words_from<I>(&mut self, count: usize, words: I) -> Region
    where
        I: IntoIterator<Item = u64>,
    {
        let region = self.alloc_bytes(count * WORD);
        if count > 0 {
            for (slot, w) in self.words_mut(region).iter_mut().zip(words) {
                *slot = w;
            }
        }
        region
    }

    #[inline]
    pub fn words(&self, region: Region) -> &[u64] {
        let start = region.offset as usize / WORD;
        &self.blocks[region.block as usize][start..start + region.words()]
    }

    #[inline]
    fn words_mut(&mut self, region: Region) -> &mut [u64] {
        let start = region.offset as usize / WORD;
        &mut self.blocks[region.block as usize][start..start + region.words()]
    }

    /// Address of the first byte of `region`.
    pub fn as_ptr(&self, region: Region) -> *const u8 {
        let block = &self.blocks[region.block as usize];
        // offset is within the block (or one past the end for empty regions)
        block
            .as_ptr()
            .cast::<u8>()
            .wrapping_add(region.offset as usize)
    }

    pub fn used_bytes(&self) -> usize {
        self.used
    }

    pub fn reserved_bytes(&self) -> usize {
        self.blocks.iter().map(|b| b.len() * WORD).sum()
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn mark(&self) -> ArenaMark {
        ArenaMark {
            block: self.current,
            offset: self.next_offset,
            used: self.used,
        }
    }

    /// Rewinds to `mark`; regions allocated after it become invalid.
    pub fn truncate_to(&mut self, mark: ArenaMark) {
        self.current = mark.block;
        self.next_offset = mark.offset;
        self.used = mark.used;
    }

    /// Discards all allocations but keeps every reserved block.
    pub fn recover(&mut self) {
        self.current = 0;
        self.next_offset = 0;
        self.used = 0;
    }

    /// Releases every block and returns to the initial single-block state.
    pub fn free_all(&mut self) {
        self.blocks = vec![new_block(self.initial_block_bytes)];
        self.recover();
    }
}

fn new_block(bytes: usize) -> Box<[u64]> {
    vec![0u64; bytes / WORD].into_boxed_slice()
}
