//! Parser for WordNet 3.0 `data.<pos>` files.
//!
//! Line layout:
//! `offset lex_filenum ss_type w_cnt word lex_id [word lex_id...] p_cnt [ptr...] [frames] | gloss`
//! where `w_cnt` and `lex_id` are hexadecimal, `p_cnt` is decimal, and each
//! pointer is `symbol offset pos source/target`. Only `@` (hypernym) and
//! `@i` (instance hypernym) pointers become taxonomy edges.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

use super::{Hypernym, Pos, Synset, SynsetId, Taxonomy, TaxonomyBuilder};

/// Parse one or more data files into a single taxonomy.
pub fn parse_wordnet<P: AsRef<Path>>(paths: &[P]) -> Result<Taxonomy> {
    let mut builder = TaxonomyBuilder::new();
    for path in paths {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        parse_reader(
            &path.display().to_string(),
            BufReader::new(file),
            &mut builder,
        )?;
    }
    builder.finish()
}

/// Parse a single data source into `builder`. Copyright-header lines (two
/// leading spaces) and blank lines are skipped.
pub fn parse_reader<R: BufRead>(name: &str, reader: R, builder: &mut TaxonomyBuilder) -> Result<()> {
    for (no, line) in reader.lines().enumerate() {
        let lineno = no + 1;
        let line = line.map_err(|e| Error::io(name, e))?;
        if line.is_empty() || line.starts_with("  ") {
            continue;
        }
        let synset = parse_line(name, lineno, &line)?;
        builder.add_synset(synset).map_err(|e| match e {
            Error::DuplicateSynset(id) => Error::Parse {
                file: name.to_string(),
                line: lineno,
                msg: format!("duplicate offset {id}"),
            },
            other => other,
        })?;
    }
    Ok(())
}

struct LineCursor<'a> {
    file: &'a str,
    lineno: usize,
    tokens: Vec<&'a str>,
    next: usize,
}

impl<'a> LineCursor<'a> {
    fn take(&mut self, what: &str) -> Result<&'a str> {
        let tok = self.tokens.get(self.next).copied().ok_or_else(|| Error::Parse {
            file: self.file.to_string(),
            line: self.lineno,
            msg: format!("line ended before {what}"),
        })?;
        self.next += 1;
        Ok(tok)
    }

    fn err(&self, msg: String) -> Error {
        Error::Parse {
            file: self.file.to_string(),
            line: self.lineno,
            msg,
        }
    }
}

fn parse_line(file: &str, lineno: usize, line: &str) -> Result<Synset> {
    let (head, gloss) = match line.split_once('|') {
        Some((h, g)) => (h, Some(g.trim().to_string())),
        None => (line, None),
    };
    let mut cur = LineCursor {
        file,
        lineno,
        tokens: head.split_whitespace().collect(),
        next: 0,
    };

    let offset_tok = cur.take("synset offset")?;
    if offset_tok.len() != 8 || !offset_tok.bytes().all(|b| b.is_ascii_digit()) {
        return Err(cur.err(format!("bad synset offset {offset_tok:?}")));
    }
    let offset: u32 = offset_tok
        .parse()
        .map_err(|_| cur.err(format!("bad synset offset {offset_tok:?}")))?;

    let lex_filenum = cur.take("lex_filenum")?;
    if lex_filenum.parse::<u8>().is_err() {
        return Err(cur.err(format!("bad lex_filenum {lex_filenum:?}")));
    }

    let ss_tok = cur.take("ss_type")?;
    let pos = ss_tok
        .chars()
        .next()
        .filter(|_| ss_tok.len() == 1)
        .and_then(Pos::from_char)
        .ok_or_else(|| cur.err(format!("bad ss_type {ss_tok:?}")))?;

    let w_cnt_tok = cur.take("w_cnt")?;
    let w_cnt = usize::from_str_radix(w_cnt_tok, 16)
        .map_err(|_| cur.err(format!("bad w_cnt {w_cnt_tok:?}")))?;
    if w_cnt == 0 {
        return Err(cur.err("w_cnt must be at least 1".into()));
    }
    let mut lemmas = Vec::with_capacity(w_cnt);
    for _ in 0..w_cnt {
        let word = cur.take("word")?;
        let lex_id = cur.take("lex_id")?;
        if u32::from_str_radix(lex_id, 16).is_err() {
            return Err(cur.err(format!("bad lex_id {lex_id:?}")));
        }
        lemmas.push(word.to_lowercase());
    }

    let p_cnt_tok = cur.take("p_cnt")?;
    let p_cnt: usize = p_cnt_tok
        .parse()
        .map_err(|_| cur.err(format!("bad p_cnt {p_cnt_tok:?}")))?;
    let mut hypernyms = Vec::new();
    for _ in 0..p_cnt {
        let symbol = cur.take("pointer symbol")?;
        let ptr_offset_tok = cur.take("pointer offset")?;
        let ptr_offset: u32 = if ptr_offset_tok.len() == 8
            && ptr_offset_tok.bytes().all(|b| b.is_ascii_digit())
        {
            ptr_offset_tok
                .parse()
                .map_err(|_| cur.err(format!("bad pointer offset {ptr_offset_tok:?}")))?
        } else {
            return Err(cur.err(format!("bad pointer offset {ptr_offset_tok:?}")));
        };
        let ptr_pos_tok = cur.take("pointer pos")?;
        let ptr_pos = ptr_pos_tok
            .chars()
            .next()
            .filter(|_| ptr_pos_tok.len() == 1)
            .and_then(Pos::from_char)
            .ok_or_else(|| cur.err(format!("bad pointer pos {ptr_pos_tok:?}")))?;
        let st = cur.take("pointer source/target")?;
        if st.len() != 4 || u32::from_str_radix(st, 16).is_err() {
            return Err(cur.err(format!("bad pointer source/target {st:?}")));
        }
        match symbol {
            "@" | "@i" => hypernyms.push(Hypernym {
                target: SynsetId::new(ptr_pos, ptr_offset),
                instance: symbol == "@i",
            }),
            _ => {}
        }
    }
    // Remaining tokens are verb frames; not used here.

    Ok(Synset {
        id: SynsetId::new(pos, offset),
        lemmas,
        hypernyms,
        gloss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn parse_str(text: &str) -> Result<Taxonomy> {
        let mut b = TaxonomyBuilder::new();
        parse_reader("fixture", text.as_bytes(), &mut b)?;
        b.finish()
    }

    const CHAIN: &str = "\
00000001 03 n 01 a 0 000 | the root\n\
00000002 03 n 01 b 0 001 @ 00000001 n 0000 | child of a\n\
00000003 03 n 01 c 0 001 @ 00000002 n 0000 | child of b\n";

    #[test]
    fn chain_fixture_parses() {
        let t = parse_str(CHAIN).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.max_depth(Pos::Noun), 3);
        let root = t.synset(SynsetId::new(Pos::Noun, 1)).unwrap();
        assert_eq!(root.hypernyms.len(), 1);
        assert!(root.hypernyms[0].target.is_virtual_root());
        assert_eq!(root.gloss.as_deref(), Some("the root"));
    }

    #[test]
    fn empty_file_yields_root_only() {
        let t = parse_str("").unwrap();
        assert_eq!(t.len(), 0);
        assert_eq!(t.max_depth(Pos::Noun), 0);
    }

    #[test]
    fn header_lines_skipped() {
        let text = format!("  1 This software and database is provided.\n{CHAIN}");
        assert_eq!(parse_str(&text).unwrap().len(), 3);
    }

    #[test]
    fn entity_style_line_parses() {
        // Shape of the WordNet 3.0 data.noun entity record: multiple pointers,
        // none of them hypernyms.
        let line = "00001740 03 n 01 entity 0 003 ~ 00001930 n 0000 ~ 00002137 n 0000 ~ 04424418 n 0000 | that which is perceived";
        let t = parse_str(&format!(
            "{line}\n00001930 03 n 01 physical_entity 0 001 @ 00001740 n 0000 | has mass\n00002137 03 n 01 abstraction 0 001 @ 00001740 n 0000 | general concept\n04424418 03 n 01 thing 0 001 @ 00001740 n 0000 | a thing\n"
        ))
        .unwrap();
        let entity = t.synset(SynsetId::new(Pos::Noun, 1740)).unwrap();
        assert_eq!(entity.hypernyms.len(), 1);
        assert!(entity.hypernyms[0].target.is_virtual_root());
        assert_eq!(t.depth(SynsetId::new(Pos::Noun, 1930)).unwrap(), 2);
    }

    #[test]
    fn instance_hypernym_flagged() {
        let text = "\
00000001 03 n 01 city 0 000 | a city\n\
00000002 03 n 01 turin 0 001 @i 00000001 n 0000 | a specific city\n";
        let t = parse_str(text).unwrap();
        let turin = t.synset(SynsetId::new(Pos::Noun, 2)).unwrap();
        assert!(turin.hypernyms[0].instance);
        assert_eq!(turin.hypernyms[0].target, SynsetId::new(Pos::Noun, 1));
    }

    #[test]
    fn multiword_and_multilemma_entries_indexed() {
        let text =
            "00000010 03 n 02 dressing_room 0 Change_Room 1 000 | room for changing\n";
        let t = parse_str(text).unwrap();
        let id = SynsetId::new(Pos::Noun, 10);
        assert_eq!(t.synsets_for_lemma("dressing_room", Pos::Noun), &[id]);
        assert_eq!(t.synsets_for_lemma("change_room", Pos::Noun), &[id]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = format!("{CHAIN}00000004 03 n 00 000\n");
        match parse_str(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_pointer_reports_line_number() {
        let text = "00000001 03 n 01 a 0 001 @ 00000002\n";
        match parse_str(text) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 1);
                assert!(msg.contains("pointer"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_offset_reports_line_number() {
        let text = "\
00000001 03 n 01 a 0 000 | first\n\
00000001 03 n 01 b 0 000 | again\n";
        match parse_str(text) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("duplicate"), "{msg}");
            }
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn parse_wordnet_reads_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.noun");
        std::fs::write(&path, CHAIN).unwrap();
        let t = parse_wordnet(&[&path]).unwrap();
        assert_eq!(t.len(), 3);
    }
}
