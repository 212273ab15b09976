use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

macro_rules! penn_tags {
    ($($variant:ident => $text:literal),+ $(,)?) => {
        /// Penn Treebank part-of-speech tag.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum PennTag { $($variant),+ }

        impl PennTag {
            pub const ALL: &'static [PennTag] = &[$(PennTag::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $(PennTag::$variant => $text),+ }
            }
        }

        impl FromStr for PennTag {
            type Err = UnknownTag;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok(PennTag::$variant),)+
                    "(" => Ok(PennTag::Lrb),
                    ")" => Ok(PennTag::Rrb),
                    "\"" => Ok(PennTag::CloseQuote),
                    _ => Err(UnknownTag(s.to_string())),
                }
            }
        }
    };
}

penn_tags! {
    Cc => "CC", Cd => "CD", Dt => "DT", Ex => "EX", Fw => "FW", In => "IN",
    Jj => "JJ", Jjr => "JJR", Jjs => "JJS", Ls => "LS", Md => "MD",
    Nn => "NN", Nns => "NNS", Nnp => "NNP", Nnps => "NNPS",
    Pdt => "PDT", Pos => "POS", Prp => "PRP", PrpPoss => "PRP$",
    Rb => "RB", Rbr => "RBR", Rbs => "RBS", Rp => "RP", Sym => "SYM", To => "TO", Uh => "UH",
    Vb => "VB", Vbd => "VBD", Vbg => "VBG", Vbn => "VBN", Vbp => "VBP", Vbz => "VBZ",
    Wdt => "WDT", Wp => "WP", WpPoss => "WP$", Wrb => "WRB",
    Period => ".", Comma => ",", Colon => ":", Lrb => "-LRB-", Rrb => "-RRB-",
    OpenQuote => "``", CloseQuote => "''", Hash => "#", Dollar => "$",
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown PENN tag {0:?}")]
pub struct UnknownTag(pub String);

impl PennTag {
    /// Nouns, verbs, adjectives, adverbs and cardinal numbers.
    pub fn is_content(self) -> bool {
        use PennTag::*;
        matches!(
            self,
            Nn | Nns | Nnp | Nnps | Vb | Vbd | Vbg | Vbn | Vbp | Vbz | Jj | Jjr | Jjs | Rb | Rbr | Rbs | Cd
        )
    }
}

impl fmt::Display for PennTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for PennTag {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for PennTag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
