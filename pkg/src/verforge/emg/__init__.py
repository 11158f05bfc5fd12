"""Environment-model notation, generators and the C translator."""

from .generators import entry_caller_generate, run_generator_pipeline
from .model import (
    Block,
    IntermediateModel,
    Jump,
    Label,
    Receive,
    ScenarioModel,
    Send,
    SignalPairing,
    enumerate_traces,
    pair_signals,
    parse_model,
    validate_model,
)
from .process import (
    BlockRef,
    Choice,
    JumpRef,
    ProcessExpr,
    ReceiveRef,
    Seq,
    SendRef,
    parse_process,
    print_process,
)
from .translate import HarnessBundle, TranslationOptions, translate

__all__ = [
    "Block", "BlockRef", "Choice", "HarnessBundle", "IntermediateModel",
    "Jump", "JumpRef", "Label", "ProcessExpr", "Receive", "ReceiveRef",
    "ScenarioModel", "Send", "SendRef", "Seq", "SignalPairing",
    "TranslationOptions", "entry_caller_generate", "enumerate_traces",
    "pair_signals", "parse_model", "parse_process", "print_process",
    "run_generator_pipeline", "translate", "validate_model",
]
