"""nudgekit: a proactive, context-aware nudging pipeline.

Egocentric frames are filtered for sharpness and redundancy, described,
classified for goal relevance, gated by a debouncer, and injected into an
ideal-self dialogue agent that decides when to speak. Everything runs
against deterministic scripted providers on a simulated clock, or live
through the websocket gateway.
"""

from .clock import Clock, SimulatedClock, WallClock
from .context_classifier import (
    ClassifierWindow,
    ContextState,
    Verdict,
    build_classifier_prompt,
    classify,
    parse_classifier_output,
)
from .debouncer import (
    DebounceConfig,
    DebounceDecision,
    DebounceState,
    TriggerReason,
    reset,
    step,
)
from .engine import EngineConfig, SessionEngine, engine_from_payload
from .errors import NudgeKitError
from .frame_pipeline import (
    CameraConfig,
    FilterConfig,
    FrameBatch,
    FrameBatcher,
    FrameSample,
    filter_batch,
    laplacian_variance,
    ssim,
    to_grayscale,
)
from .gateway import Envelope, SessionHub, decode, encode
from .perception import ObservationSequencer, SceneObservation, describe_batch, scene_prompt
from .proactive_agent import (
    AgentConfig,
    ConversationTurn,
    NudgeAgent,
    NudgeResponse,
    NudgeTrigger,
    SpeechActivity,
    quiet_check,
)
from .providers import (
    AudioHandle,
    ProviderBundle,
    ProviderError,
    ProviderLatencyProfile,
    ProviderTimeout,
    ScriptedReply,
    ScriptExhausted,
    mock_bundle,
)
from .scenario_runner import (
    GoldenDiff,
    RunResult,
    ScenarioScript,
    bundled_scenario_path,
    compare_golden,
    load_script,
    parse_script,
    run,
)
from .tracing import IncompleteTrace, LatencyReport, Tracer, TraceSpan, end_to_end_latency
from .user_model import (
    PersonaPrompt,
    ProfileStore,
    UserProfile,
    create_profile,
    render_persona_prompt,
)

__version__ = "0.1.0"
