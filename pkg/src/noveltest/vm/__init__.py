"""Deterministic sprite-game interpreter with coverage and behaviour extraction."""

from noveltest.vm.features import FeatureSchema, build_schema, extract_features, squash
from noveltest.vm.interpreter import (
    GAME_OVER,
    NOOP,
    ROOT,
    RUNNING,
    TIMEOUT,
    WON,
    Action,
    EpisodeResult,
    GameInstance,
    GameState,
    entry_id,
    load_game,
    run_episode,
    step,
)
from noveltest.vm.spec import (
    GameSpec,
    GameSpecError,
    Predicate,
    Script,
    SpriteSpec,
    Statement,
    Trigger,
    load_spec_file,
    spec_from_dict,
    spec_to_dict,
)
