//! Immutable data matrices, loaders and format conversions.

mod cache;
mod edges;
mod matrix;
mod svmlight;

pub use cache::{
    decode as decode_cache, encode as encode_cache, is_cache, read_cache, write_cache,
};
pub use edges::{load_edge_list, parse_edge_list, EdgeList};
pub use matrix::{
    CtrIndex, DataMatrix, Format, Lane, LaneIter, Layout, MatrixStats, DEFAULT_DENSE_CAP,
};
pub use svmlight::{load_svmlight, parse_svmlight, write_svmlight};

use std::path::Path;

use crate::error::{Error, Result};

/// Load a matrix, sniffing the binary cache magic and falling back to svmlight text.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<DataMatrix> {
    let path = path.as_ref();
    let mut head = [0u8; 4];
    let n = {
        use std::io::Read;
        let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        f.read(&mut head).map_err(|e| Error::io(path, e))?
    };
    if is_cache(&head[..n]) {
        read_cache(path)
    } else {
        load_svmlight(path)
    }
}
