//! Fixed-size character chunking with overlap.

use serde::{Deserialize, Serialize};

use super::RetrievalError;

/// One chunk of the source text. Chunk boundaries are counted in characters;
/// `span` records the corresponding byte offsets in the source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    /// 0-based position in document order.
    pub id: usize,
    pub text: String,
    /// Byte span `(start, end)` in the source text.
    pub span: (usize, usize),
}

/// Split `text` into chunks of `chunk_size` characters where consecutive
/// chunks overlap by `overlap` characters: chunk `i` starts at character
/// `i * (chunk_size - overlap)`. The final chunk may be shorter. The union
/// of chunks covers the whole text.
pub fn chunk_text(
    text: &str,
    chunk_size: usize,
    overlap: usize,
) -> Result<Vec<Chunk>, RetrievalError> {
    if chunk_size == 0 {
        return Err(RetrievalError::InvalidParams(
            "chunk_size must be positive".to_string(),
        ));
    }
    if overlap >= chunk_size {
        return Err(RetrievalError::InvalidParams(format!(
            "overlap {overlap} must be smaller than chunk_size {chunk_size}"
        )));
    }
    // byte offset of every character, plus the end sentinel
    let mut boundaries: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
    boundaries.push(text.len());
    let n_chars = boundaries.len() - 1;

    let step = chunk_size - overlap;
    let mut chunks = Vec::new();
    let mut start_char = 0usize;
    while start_char < n_chars {
        let end_char = (start_char + chunk_size).min(n_chars);
        let span = (boundaries[start_char], boundaries[end_char]);
        chunks.push(Chunk {
            id: chunks.len(),
            text: text[span.0..span.1].to_string(),
            span,
        });
        if end_char == n_chars {
            break;
        }
        start_char += step;
    }
    Ok(chunks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_is_size_minus_overlap() {
        let text = "x".repeat(2500);
        let chunks = chunk_text(&text, 1000, 100).unwrap();
        assert_eq!(chunks.len(), 3);
        let starts: Vec<_> = chunks.iter().map(|c| c.span.0).collect();
        assert_eq!(starts, [0, 900, 1800]);
        assert_eq!(chunks[2].text.len(), 700);
    }

    #[test]
    fn short_text_is_one_chunk() {
        let text = "y".repeat(500);
        let chunks = chunk_text(&text, 1000, 100).unwrap();
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].text.len(), 500);
        assert_eq!(chunks[0].span, (0, 500));
    }

    #[test]
    fn overlap_equal_to_size_is_rejected() {
        assert!(matches!(
            chunk_text("abc", 1000, 1000),
            Err(RetrievalError::InvalidParams(_))
        ));
    }

    #[test]
    fn multibyte_text_chunks_by_characters_with_byte_spans() {
        // 'é' is two bytes; chunk boundaries still count characters.
        let text = "éé ab éé cd";
        let chunks = chunk_text(text, 4, 1).unwrap();
        for c in &chunks {
            assert!(c.text.chars().count() <= 4);
            assert_eq!(&text[c.span.0..c.span.1], c.text);
        }
        // full coverage
        assert_eq!(chunks.first().unwrap().span.0, 0);
        assert_eq!(chunks.last().unwrap().span.1, text.len());
    }

    #[test]
    fn exact_fit_is_single_chunk() {
        let text = "z".repeat(1000);
        let chunks = chunk_text(&text, 1000, 100).unwrap();
        assert_eq!(chunks.len(), 1);
    }
}
