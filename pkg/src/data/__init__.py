from src.data.corpus import Corpus, FITBQuestion, ItemRecord, Outfit, load_corpus, save_corpus
from src.data.generators import (
    add_negatives,
    build_fitb_questions,
    generate_fitb,
    generate_negative_outfit,
    oversample_balance,
)
from src.data.synth import SynthSpec, synth_corpus

__all__ = [
    "Corpus",
    "FITBQuestion",
    "ItemRecord",
    "Outfit",
    "SynthSpec",
    "add_negatives",
    "build_fitb_questions",
    "generate_fitb",
    "generate_negative_outfit",
    "load_corpus",
    "oversample_balance",
    "save_corpus",
    "synth_corpus",
]
