//! Strings, images and edge-colored ordered graphs, plus permutations,
//! interval partitions and the image-to-graph encoding.
//!
//! Positions are 0-based in the Rust API. Text formats and the command line
//! use 1-based positions.

use std::fmt;
use std::ops::Range;

use crate::error::{param, Error, Result};
use crate::math::pairs;

/// Index of a symbol in an [`Alphabet`].
pub type Symbol = u8;

/// Largest alphabet supported; one slot is kept free for the encoding's
/// "no edge" symbol.
pub const MAX_ALPHABET: usize = 255;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let symbols: Vec<String> = labels.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return param("alphabet must be non-empty");
        }
        if symbols.len() > MAX_ALPHABET {
            return param(format!("alphabet larger than {MAX_ALPHABET}"));
        }
        for (i, s) in symbols.iter().enumerate() {
            if s.is_empty() || s.chars().any(char::is_whitespace) {
                return param(format!("bad symbol label {s:?}"));
            }
            if symbols[..i].contains(s) {
                return param(format!("duplicate symbol label {s:?}"));
            }
        }
        Ok(Alphabet { symbols })
    }

    pub fn binary() -> Self {
        Alphabet::numeric(2)
    }

    /// Labels "0", "1", ..., "k-1".
    pub fn numeric(k: usize) -> Self {
        Alphabet {
            symbols: (0..k.clamp(1, MAX_ALPHABET)).map(|i| i.to_string()).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn label(&self, s: Symbol) -> Option<&str> {
        self.symbols.get(s as usize).map(String::as_str)
    }

    pub fn index_of(&self, label: &str) -> Option<Symbol> {
        self.symbols.iter().position(|s| s == label).map(|i| i as Symbol)
    }

    /// The alphabet extended by a label not already present, and that label's index.
    pub fn with_fresh_symbol(&self) -> Result<(Alphabet, Symbol)> {
        if self.symbols.len() >= MAX_ALPHABET {
            return param("no room for a fresh symbol");
        }
        let mut fresh = String::from("~");
        while self.symbols.contains(&fresh) {
            fresh.push('~');
        }
        let mut symbols = self.symbols.clone();
        symbols.push(fresh);
        let idx = (symbols.len() - 1) as Symbol;
        Ok((Alphabet { symbols }, idx))
    }

    fn parse_token(&self, tok: &str) -> Result<Symbol> {
        self.index_of(tok)
            .ok_or_else(|| Error::Parse(format!("symbol {tok:?} not in alphabet")))
    }
}

fn check_symbols(values: &[Symbol], sigma: usize) -> Result<()> {
    if sigma == 0 || sigma > MAX_ALPHABET + 1 {
        return param(format!("alphabet size {sigma} out of range"));
    }
    if let Some(v) = values.iter().find(|&&v| v as usize >= sigma) {
        return param(format!("symbol index {v} outside alphabet of size {sigma}"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderedString {
    sigma: usize,
    entries: Vec<Symbol>,
}

impl OrderedString {
    pub fn new(entries: Vec<Symbol>, sigma: usize) -> Result<Self> {
        if entries.is_empty() {
            return param("string length must be at least 1");
        }
        check_symbols(&entries, sigma)?;
        Ok(OrderedString { sigma, entries })
    }

    /// Parses one symbol per character, or whitespace-separated tokens when
    /// the text contains whitespace between symbols.
    pub fn parse(text: &str, alphabet: &Alphabet) -> Result<Self> {
        let trimmed = text.trim();
        let entries = if trimmed.split_whitespace().nth(1).is_some() {
            trimmed
                .split_whitespace()
                .map(|t| alphabet.parse_token(t))
                .collect::<Result<Vec<_>>>()?
        } else {
            trimmed
                .chars()
                .map(|c| alphabet.parse_token(&c.to_string()))
                .collect::<Result<Vec<_>>>()?
        };
        OrderedString::new(entries, alphabet.size())
    }

    pub fn to_text(&self, alphabet: &Alphabet) -> String {
        let labels: Vec<&str> = self
            .entries
            .iter()
            .map(|&s| alphabet.label(s).unwrap_or("?"))
            .collect();
        if labels.iter().all(|l| l.chars().count() == 1) {
            labels.concat()
        } else {
            labels.join(" ")
        }
    }

    /// Binary helper: "0110" style literals.
    pub fn from_bits(bits: &str) -> Result<Self> {
        OrderedString::parse(bits, &Alphabet::binary())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sigma(&self) -> usize {
        self.sigma
    }

    pub fn entries(&self) -> &[Symbol] {
        &self.entries
    }

    pub fn at(&self, i: usize) -> Symbol {
        self.entries[i]
    }
}

impl fmt::Display for OrderedString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sigma <= 10 {
            for &e in &self.entries {
                write!(f, "{e}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.entries.iter().map(|e| e.to_string()).collect();
            write!(f, "{}", parts.join(" "))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Image {
    rows: usize,
    cols: usize,
    sigma: usize,
    pixels: Vec<Symbol>,
}

impl Image {
    pub fn new(rows: usize, cols: usize, pixels: Vec<Symbol>, sigma: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("image dimensions must be positive".into()));
        }
        if pixels.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "expected {} pixels, got {}",
                rows * cols,
                pixels.len()
            )));
        }
        check_symbols(&pixels, sigma)?;
        Ok(Image {
            rows,
            cols,
            sigma,
            pixels,
        })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        sigma: usize,
        mut f: impl FnMut(usize, usize) -> Symbol,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                pixels.push(f(r, c));
            }
        }
        Image::new(rows, cols, pixels, sigma)
    }

    /// Text grid: one row per line, symbols separated by whitespace (or packed
    /// when every label is a single character). Plain PGM (`P2`) is also read,
    /// with gray level 0 mapped to symbol index 1 ("black") for binary images
    /// and levels used as indices otherwise.
    pub fn parse(text: &str, alphabet: &Alphabet) -> Result<Self> {
        let content: Vec<&str> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .collect();
        if content.first() == Some(&"P2") {
            return Image::parse_pgm(&content[1..].join(" "), alphabet);
        }
        let mut pixels = Vec::new();
        let mut cols = None;
        for line in &content {
            let row: Vec<Symbol> = if line.split_whitespace().nth(1).is_some() {
                line.split_whitespace()
                    .map(|t| alphabet.parse_token(t))
                    .collect::<Result<_>>()?
            } else {
                line.chars()
                    .map(|c| alphabet.parse_token(&c.to_string()))
                    .collect::<Result<_>>()?
            };
            match cols {
                None => cols = Some(row.len()),
                Some(c) if c != row.len() => {
                    return Err(Error::Parse("ragged image rows".into()));
                }
                _ => {}
            }
            pixels.extend(row);
        }
        let cols = cols.ok_or_else(|| Error::Parse("empty image".into()))?;
        Image::new(content.len(), cols, pixels, alphabet.size())
    }

    fn parse_pgm(body: &str, alphabet: &Alphabet) -> Result<Self> {
        let nums: Vec<usize> = body
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| Error::Parse(e.to_string())))
            .collect::<Result<_>>()?;
        if nums.len() < 3 {
            return Err(Error::Parse("truncated PGM header".into()));
        }
        let (cols, rows, maxval) = (nums[0], nums[1], nums[2]);
        let data = &nums[3..];
        if data.len() != rows * cols {
            return Err(Error::Parse("PGM pixel count mismatch".into()));
        }
        let sigma = alphabet.size();
        let pixels = data
            .iter()
            .map(|&v| {
                if sigma == 2 {
                    Ok(if v * 2 <= maxval { 1 } else { 0 })
                } else if v < sigma {
                    Ok(v as Symbol)
                } else {
                    Err(Error::Parse(format!("gray level {v} outside alphabet")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Image::new(rows, cols, pixels, sigma)
    }

    pub fn to_text(&self, alphabet: &Alphabet) -> String {
        let packed = alphabet.symbols().iter().all(|s| s.chars().count() == 1);
        let mut out = String::new();
        for r in 0..self.rows {
            let row: Vec<&str> = (0..self.cols)
                .map(|c| alphabet.label(self.get(r, c)).unwrap_or("?"))
                .collect();
            out.push_str(&if packed { row.concat() } else { row.join(" ") });
            out.push('\n');
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn sigma(&self) -> usize {
        self.sigma
    }

    pub fn pixels(&self) -> &[Symbol] {
        &self.pixels
    }

    pub fn get(&self, r: usize, c: usize) -> Symbol {
        self.pixels[r * self.cols + c]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderedGraph {
    n: usize,
    sigma: usize,
    colors: Vec<Symbol>,
}

/// Position of the pair {i, j} (i < j) in the order (0,1),(0,2),...,(n-2,n-1).
#[inline]
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl OrderedGraph {
    pub fn new(n: usize, colors: Vec<Symbol>, sigma: usize) -> Result<Self> {
        if n == 0 {
            return param("graph needs at least one vertex");
        }
        if colors.len() != pairs(n) {
            return Err(Error::Dimension(format!(
                "expected {} pair colors for n={n}, got {}",
                pairs(n),
                colors.len()
            )));
        }
        check_symbols(&colors, sigma)?;
        Ok(OrderedGraph { n, sigma, colors })
    }

    pub fn from_fn(
        n: usize,
        sigma: usize,
        mut f: impl FnMut(usize, usize) -> Symbol,
    ) -> Result<Self> {
        let mut colors = Vec::with_capacity(pairs(n));
        for i in 0..n {
            for j in i + 1..n {
                colors.push(f(i, j));
            }
        }
        OrderedGraph::new(n, colors, sigma)
    }

    pub fn monochromatic(n: usize, color: Symbol, sigma: usize) -> Result<Self> {
        OrderedGraph::new(n, vec![color; pairs(n)], sigma)
    }

    /// Header `n |Σ|` followed by the pair colors in pair order.
    pub fn parse(text: &str, alphabet: Option<&Alphabet>) -> Result<Self> {
        let mut tokens = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace);
        let n: usize = tokens
            .next()
            .ok_or_else(|| Error::Parse("missing vertex count".into()))?
            .parse()
            .map_err(|_| Error::Parse("bad vertex count".into()))?;
        let sigma: usize = tokens
            .next()
            .ok_or_else(|| Error::Parse("missing alphabet size".into()))?
            .parse()
            .map_err(|_| Error::Parse("bad alphabet size".into()))?;
        let numeric = Alphabet::numeric(sigma);
        let alphabet = alphabet.unwrap_or(&numeric);
        if alphabet.size() != sigma {
            return Err(Error::Parse(format!(
                "header alphabet size {sigma} does not match alphabet of size {}",
                alphabet.size()
            )));
        }
        let colors = tokens
            .map(|t| alphabet.parse_token(t))
            .collect::<Result<Vec<_>>>()?;
        OrderedGraph::new(n, colors, sigma)
    }

    pub fn to_text(&self, alphabet: Option<&Alphabet>) -> String {
        let numeric = Alphabet::numeric(self.sigma);
        let alphabet = alphabet.unwrap_or(&numeric);
        let mut out = format!("{} {}\n", self.n, self.sigma);
        for i in 0..self.n {
            let row: Vec<&str> = (i + 1..self.n)
                .map(|j| alphabet.label(self.color(i, j)).unwrap_or("?"))
                .collect();
            if !row.is_empty() {
                out.push_str(&row.join(" "));
                out.push('\n');
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sigma(&self) -> usize {
        self.sigma
    }

    pub fn colors(&self) -> &[Symbol] {
        &self.colors
    }

    /// Color of the unordered pair {i, j}; `i != j`.
    #[inline]
    pub fn color(&self, i: usize, j: usize) -> Symbol {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.colors[pair_index(self.n, a, b)]
    }

    /// Induced colors on `vertices` read in list order: entry for list
    /// positions a < b is the color of {vertices[a], vertices[b]}.
    pub fn induced_key(&self, vertices: &[usize]) -> Vec<Symbol> {
        let q = vertices.len();
        let mut key = Vec::with_capacity(pairs(q));
        for a in 0..q {
            for b in a + 1..q {
                key.push(self.color(vertices[a], vertices[b]));
            }
        }
        key
    }

    /// Binary complement (color c becomes 1 - c); only for |Σ| = 2.
    pub fn complement(&self) -> Result<Self> {
        if self.sigma != 2 {
            return param("complement is defined for two colors");
        }
        OrderedGraph::new(self.n, self.colors.iter().map(|c| 1 - c).collect(), 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StructureKind {
    String,
    Image,
    Graph,
}

impl StructureKind {
    pub fn name(self) -> &'static str {
        match self {
            StructureKind::String => "string",
            StructureKind::Image => "image",
            StructureKind::Graph => "graph",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "string" => Ok(StructureKind::String),
            "image" => Ok(StructureKind::Image),
            "graph" => Ok(StructureKind::Graph),
            other => param(format!("unknown structure kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum OrderedStructure {
    String(OrderedString),
    Image(Image),
    Graph(OrderedGraph),
}

impl From<OrderedString> for OrderedStructure {
    fn from(s: OrderedString) -> Self {
        OrderedStructure::String(s)
    }
}

impl From<Image> for OrderedStructure {
    fn from(i: Image) -> Self {
        OrderedStructure::Image(i)
    }
}

impl From<OrderedGraph> for OrderedStructure {
    fn from(g: OrderedGraph) -> Self {
        OrderedStructure::Graph(g)
    }
}

impl OrderedStructure {
    pub fn kind(&self) -> StructureKind {
        match self {
            OrderedStructure::String(_) => StructureKind::String,
            OrderedStructure::Image(_) => StructureKind::Image,
            OrderedStructure::Graph(_) => StructureKind::Graph,
        }
    }

    pub fn sigma(&self) -> usize {
        match self {
            OrderedStructure::String(s) => s.sigma,
            OrderedStructure::Image(i) => i.sigma,
            OrderedStructure::Graph(g) => g.sigma,
        }
    }

    /// Number of base elements that basic moves act on: string positions,
    /// graph vertices, or rows followed by columns for images.
    pub fn base_len(&self) -> usize {
        match self {
            OrderedStructure::String(s) => s.len(),
            OrderedStructure::Image(i) => i.rows + i.cols,
            OrderedStructure::Graph(g) => g.n,
        }
    }

    /// The domain X whose size normalizes Hamming distance.
    pub fn values(&self) -> &[Symbol] {
        match self {
            OrderedStructure::String(s) => &s.entries,
            OrderedStructure::Image(i) => &i.pixels,
            OrderedStructure::Graph(g) => &g.colors,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            OrderedStructure::String(s) => (s.len(), 1),
            OrderedStructure::Image(i) => (i.rows, i.cols),
            OrderedStructure::Graph(g) => (g.n, 1),
        }
    }

    pub fn same_shape(&self, other: &OrderedStructure) -> bool {
        self.kind() == other.kind() && self.dims() == other.dims() && self.sigma() == other.sigma()
    }

    /// Same shape with a different value vector.
    pub fn with_values(&self, values: Vec<Symbol>) -> Result<OrderedStructure> {
        Ok(match self {
            OrderedStructure::String(s) => OrderedString::new(values, s.sigma)?.into(),
            OrderedStructure::Image(i) => Image::new(i.rows, i.cols, values, i.sigma)?.into(),
            OrderedStructure::Graph(g) => OrderedGraph::new(g.n, values, g.sigma)?.into(),
        })
    }

    pub fn as_string(&self) -> Option<&OrderedString> {
        match self {
            OrderedStructure::String(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_image(&self) -> Option<&Image> {
        match self {
            OrderedStructure::Image(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_graph(&self) -> Option<&OrderedGraph> {
        match self {
            OrderedStructure::Graph(g) => Some(g),
            _ => None,
        }
    }

    /// Values induced by a sorted list of base elements: the entries of a
    /// string, or the pair colors of a graph (images go through the encoding).
    pub fn induced_key(&self, positions: &[usize]) -> Vec<Symbol> {
        match self {
            OrderedStructure::String(s) => positions.iter().map(|&p| s.entries[p]).collect(),
            OrderedStructure::Graph(g) => g.induced_key(positions),
            OrderedStructure::Image(i) => encode_base_graph(i).induced_key(positions),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            map: (0..n).collect(),
        }
    }

    /// From 0-based images σ(0..n).
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &v in &map {
            if v >= n || seen[v] {
                return param("not a bijection");
            }
            seen[v] = true;
        }
        Ok(Permutation { map })
    }

    /// From the 1-based notation σ = (σ(1), ..., σ(n)).
    pub fn from_one_based(values: &[usize]) -> Result<Self> {
        if values.contains(&0) {
            return param("1-based permutation contains 0");
        }
        Permutation::new(values.iter().map(|v| v - 1).collect())
    }

    /// σ_x exchanging x and x+1 (0-based).
    pub fn adjacent(n: usize, x: usize) -> Result<Self> {
        if x + 1 >= n {
            return param(format!("adjacent transposition at {x} outside 0..{}", n.saturating_sub(1)));
        }
        let mut map: Vec<usize> = (0..n).collect();
        map.swap(x, x + 1);
        Ok(Permutation { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.map.iter().map(|v| v + 1).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &v)| i == v)
    }

    /// (self ∘ other)(i) = self(other(i)).
    pub fn compose(&self, other: &Permutation) -> Result<Self> {
        if self.len() != other.len() {
            return param("composing permutations of different sizes");
        }
        Ok(Permutation {
            map: other.map.iter().map(|&i| self.map[i]).collect(),
        })
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v] = i;
        }
        Permutation { map: inv }
    }

    /// All permutations of 0..n in lexicographic order.
    pub fn all(n: usize) -> AllPermutations {
        AllPermutations {
            current: Some((0..n).collect()),
        }
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.one_based().iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub struct AllPermutations {
    current: Option<Vec<usize>>,
}

impl Iterator for AllPermutations {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let cur = self.current.take()?;
        let mut next = cur.clone();
        if crate::math::next_permutation(&mut next) {
            self.current = Some(next);
        }
        Some(Permutation { map: cur })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntervalPartition {
    n: usize,
    bounds: Vec<usize>,
}

impl IntervalPartition {
    /// The k-interval equipartition of n elements: contiguous parts whose
    /// sizes differ by at most one, larger parts first.
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return param(format!("need 1 <= k <= n, got k={k}, n={n}"));
        }
        let (base, extra) = (n / k, n % k);
        let mut bounds = Vec::with_capacity(k + 1);
        bounds.push(0);
        for j in 0..k {
            let size = base + usize::from(j < extra);
            bounds.push(bounds[j] + size);
        }
        Ok(IntervalPartition { n, bounds })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn bounds(&self) -> &[usize] {
        &self.bounds
    }

    pub fn range(&self, j: usize) -> Range<usize> {
        self.bounds[j]..self.bounds[j + 1]
    }

    pub fn size(&self, j: usize) -> usize {
        self.bounds[j + 1] - self.bounds[j]
    }

    pub fn sizes(&self) -> Vec<usize> {
        (0..self.k()).map(|j| self.size(j)).collect()
    }

    pub fn part_of(&self, i: usize) -> usize {
        self.bounds.partition_point(|&b| b <= i) - 1
    }
}

/// Encodes an m×n image as an ordered graph on m+n vertices (rows first, then
/// columns). Same-side pairs get the fresh symbol `sigma`; pair (row x,
/// column y) gets the pixel f(x, y).
pub(crate) fn encode_base_graph(img: &Image) -> OrderedGraph {
    let (m, n) = (img.rows, img.cols);
    let none = img.sigma as Symbol;
    let colors = {
        let total = m + n;
        let mut colors = Vec::with_capacity(pairs(total));
        for i in 0..total {
            for j in i + 1..total {
                colors.push(if i < m && j >= m { img.get(i, j - m) } else { none });
            }
        }
        colors
    };
    OrderedGraph {
        n: m + n,
        sigma: img.sigma + 1,
        colors,
    }
}

/// Square images only. The "no edge" symbol is the index `img.sigma()`, one
/// past the image alphabet (see [`Alphabet::with_fresh_symbol`]).
pub fn image_to_ordered_graph(img: &Image) -> Result<OrderedGraph> {
    if !img.is_square() {
        return Err(Error::Dimension(format!(
            "encoding needs a square image, got {}x{}",
            img.rows, img.cols
        )));
    }
    if img.sigma >= MAX_ALPHABET + 1 {
        return param("no room for the no-edge symbol");
    }
    Ok(encode_base_graph(img))
}

/// Inverse of [`image_to_ordered_graph`] on its range.
pub fn ordered_graph_to_image(g: &OrderedGraph) -> Result<Image> {
    if g.n % 2 != 0 || g.sigma < 2 {
        return param("graph is not an image encoding");
    }
    graph_to_image_blocks(g, g.n / 2)
}

fn graph_to_image_blocks(g: &OrderedGraph, m: usize) -> Result<Image> {
    let none = (g.sigma - 1) as Symbol;
    let n = g.n - m;
    for i in 0..g.n {
        for j in i + 1..g.n {
            let cross = i < m && j >= m;
            let c = g.color(i, j);
            if cross == (c == none) {
                return param("graph is not an image encoding");
            }
        }
    }
    Image::from_fn(m, n, g.sigma - 1, |r, c| g.color(r, m + c))
}

fn permute_string(s: &OrderedString, sigma: &Permutation) -> OrderedString {
    let mut entries = vec![0; s.len()];
    for i in 0..s.len() {
        entries[sigma.apply(i)] = s.entries[i];
    }
    OrderedString {
        sigma: s.sigma,
        entries,
    }
}

fn permute_graph(g: &OrderedGraph, sigma: &Permutation) -> OrderedGraph {
    let inv = sigma.inverse();
    let mut colors = Vec::with_capacity(g.colors.len());
    for a in 0..g.n {
        for b in a + 1..g.n {
            colors.push(g.color(inv.apply(a), inv.apply(b)));
        }
    }
    OrderedGraph {
        n: g.n,
        sigma: g.sigma,
        colors,
    }
}

/// H with H(σ(i)σ(j)) = G(ij) (strings: H(σ(i)) = G(i)). An image permutation
/// that keeps rows among rows and columns among columns yields an image;
/// anything else yields the permuted graph encoding.
pub fn apply_permutation(f: &OrderedStructure, sigma: &Permutation) -> Result<OrderedStructure> {
    if sigma.len() != f.base_len() {
        return param(format!(
            "permutation on {} elements applied to structure with {} base elements",
            sigma.len(),
            f.base_len()
        ));
    }
    Ok(match f {
        OrderedStructure::String(s) => permute_string(s, sigma).into(),
        OrderedStructure::Graph(g) => permute_graph(g, sigma).into(),
        OrderedStructure::Image(img) => {
            let m = img.rows;
            let keeps_blocks = (0..sigma.len()).all(|i| (i < m) == (sigma.apply(i) < m));
            if keeps_blocks {
                let inv = sigma.inverse();
                Image::from_fn(img.rows, img.cols, img.sigma, |r, c| {
                    img.get(inv.apply(r), inv.apply(m + c) - m)
                })?
                .into()
            } else {
                permute_graph(&encode_base_graph(img), sigma).into()
            }
        }
    })
}

/// f ∘ σ_x: exchanges base elements x and x+1 (0-based). For an m-row image,
/// x < m-1 swaps rows, x ≥ m swaps columns, and x = m-1 mixes the last row
/// with the first column; that move is allowed but logged, and its result is
/// the moved graph encoding.
pub fn apply_basic_move(f: &OrderedStructure, x: usize) -> Result<OrderedStructure> {
    let len = f.base_len();
    if x + 1 >= len {
        return param(format!("basic move at {x} outside 0..{}", len.saturating_sub(1)));
    }
    match f {
        OrderedStructure::String(s) => {
            let mut entries = s.entries.clone();
            entries.swap(x, x + 1);
            Ok(OrderedString {
                sigma: s.sigma,
                entries,
            }
            .into())
        }
        OrderedStructure::Graph(g) => Ok(swap_vertices(g, x).into()),
        OrderedStructure::Image(img) => {
            let m = img.rows;
            if x + 1 < m {
                let mut out = img.clone();
                for c in 0..img.cols {
                    out.pixels.swap(x * img.cols + c, (x + 1) * img.cols + c);
                }
                Ok(out.into())
            } else if x >= m {
                let (c0, c1) = (x - m, x - m + 1);
                let mut out = img.clone();
                for r in 0..img.rows {
                    out.pixels.swap(r * img.cols + c0, r * img.cols + c1);
                }
                Ok(out.into())
            } else {
                log::warn!("basic move at {x} exchanges the last row with the first column");
                Ok(swap_vertices(&encode_base_graph(img), x).into())
            }
        }
    }
}

pub(crate) fn swap_vertices(g: &OrderedGraph, x: usize) -> OrderedGraph {
    let mut out = g.clone();
    let n = g.n;
    for v in 0..n {
        if v == x || v == x + 1 {
            continue;
        }
        let a = pair_index(n, v.min(x), v.max(x));
        let b = pair_index(n, v.min(x + 1), v.max(x + 1));
        out.colors.swap(a, b);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> Alphabet {
        Alphabet::new(["a", "b", "c"]).unwrap()
    }

    #[test]
    fn alphabet_rejects_duplicates() {
        assert!(Alphabet::new(["a", "a"]).is_err());
        assert!(Alphabet::new(Vec::<String>::new()).is_err());
        let (ext, idx) = Alphabet::binary().with_fresh_symbol().unwrap();
        assert_eq!(ext.size(), 3);
        assert_eq!(idx, 2);
    }

    #[test]
    fn string_parse_round_trip() {
        let a = abc();
        let s = OrderedString::parse("abca", &a).unwrap();
        assert_eq!(s.entries(), &[0, 1, 2, 0]);
        assert_eq!(s.to_text(&a), "abca");
        let long = Alphabet::new(["lo", "hi"]).unwrap();
        let t = OrderedString::parse("lo hi hi", &long).unwrap();
        assert_eq!(t.entries(), &[0, 1, 1]);
        assert_eq!(t.to_text(&long), "lo hi hi");
    }

    #[test]
    fn interval_partition_sizes() {
        assert_eq!(IntervalPartition::new(6, 3).unwrap().sizes(), vec![2, 2, 2]);
        assert_eq!(IntervalPartition::new(5, 5).unwrap().sizes(), vec![1; 5]);
        assert_eq!(IntervalPartition::new(10, 3).unwrap().sizes(), vec![4, 3, 3]);
        assert!(IntervalPartition::new(3, 4).is_err());
        assert!(IntervalPartition::new(3, 0).is_err());
        let p = IntervalPartition::new(10, 3).unwrap();
        assert_eq!(p.part_of(0), 0);
        assert_eq!(p.part_of(3), 0);
        assert_eq!(p.part_of(4), 1);
        assert_eq!(p.part_of(9), 2);
    }

    #[test]
    fn encoding_small_cases() {
        let one = Image::new(1, 1, vec![1], 2).unwrap();
        let g = image_to_ordered_graph(&one).unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.colors(), &[1]);

        let white = Image::new(2, 2, vec![0; 4], 2).unwrap();
        let g = image_to_ordered_graph(&white).unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.color(0, 1), 2);
        assert_eq!(g.color(2, 3), 2);
        for (i, j) in [(0, 2), (0, 3), (1, 2), (1, 3)] {
            assert_eq!(g.color(i, j), 0);
        }
        assert_eq!(ordered_graph_to_image(&g).unwrap(), white);

        let rect = Image::new(2, 3, vec![0; 6], 2).unwrap();
        assert!(matches!(image_to_ordered_graph(&rect), Err(Error::Dimension(_))));
    }

    #[test]
    fn basic_move_examples() {
        let ab = OrderedStructure::from(OrderedString::parse("ab", &abc()).unwrap());
        let ba = apply_basic_move(&ab, 0).unwrap();
        assert_eq!(ba.values(), &[1, 0]);
        assert!(apply_basic_move(&ab, 1).is_err());

        // c12 = A, c13 = B, c23 = C
        let g = OrderedStructure::from(OrderedGraph::new(3, vec![0, 1, 2], 3).unwrap());
        let moved = apply_basic_move(&g, 0).unwrap();
        assert_eq!(moved.values(), &[0, 2, 1]);
    }

    #[test]
    fn image_moves_rows_and_columns() {
        let img = Image::new(2, 2, vec![0, 1, 1, 1], 2).unwrap();
        let f = OrderedStructure::from(img);
        let rows = apply_basic_move(&f, 0).unwrap();
        assert_eq!(rows.values(), &[1, 1, 0, 1]);
        let cols = apply_basic_move(&f, 2).unwrap();
        assert_eq!(cols.values(), &[1, 0, 1, 1]);
        let crossing = apply_basic_move(&f, 1).unwrap();
        assert_eq!(crossing.kind(), StructureKind::Graph);
    }

    #[test]
    fn reversal_of_string() {
        let s = OrderedStructure::from(OrderedString::parse("abc", &abc()).unwrap());
        let rev = Permutation::new(vec![2, 1, 0]).unwrap();
        assert_eq!(apply_permutation(&s, &rev).unwrap().values(), &[2, 1, 0]);
        assert_eq!(apply_permutation(&s, &Permutation::identity(3)).unwrap(), s);
    }

    #[test]
    fn permutation_basics() {
        let p = Permutation::from_one_based(&[2, 4, 1, 3]).unwrap();
        assert_eq!(p.as_slice(), &[1, 3, 0, 2]);
        assert!(p.compose(&p.inverse()).unwrap().is_identity());
        assert_eq!(Permutation::all(4).count(), 24);
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert_eq!(p.to_string(), "(2,4,1,3)");
    }

    #[test]
    fn image_permutation_keeping_blocks_is_image() {
        let img = Image::new(2, 2, vec![0, 1, 0, 0], 2).unwrap();
        let f = OrderedStructure::from(img);
        let swap_cols = Permutation::new(vec![0, 1, 3, 2]).unwrap();
        let out = apply_permutation(&f, &swap_cols).unwrap();
        assert_eq!(out.values(), &[1, 0, 0, 0]);
        let swap_cross = Permutation::new(vec![0, 2, 1, 3]).unwrap();
        assert_eq!(apply_permutation(&f, &swap_cross).unwrap().kind(), StructureKind::Graph);
    }

    #[test]
    fn graph_text_round_trip() {
        let g = OrderedGraph::new(4, vec![0, 1, 1, 0, 1, 0], 2).unwrap();
        let text = g.to_text(None);
        assert_eq!(OrderedGraph::parse(&text, None).unwrap(), g);
        assert!(OrderedGraph::parse("3 2\n0 1", None).is_err());
    }

    #[test]
    fn image_text_and_pgm() {
        let a = Alphabet::binary();
        let img = Image::parse("010\n111\n", &a).unwrap();
        assert_eq!((img.rows(), img.cols()), (2, 3));
        assert_eq!(img.to_text(&a), "010\n111\n");
        let pgm = Image::parse("P2\n2 1\n255\n0 255\n", &a).unwrap();
        assert_eq!(pgm.pixels(), &[1, 0]);
    }
}
