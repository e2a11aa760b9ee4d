"""Model backends: endpoints, the dispatch hub, mock scripting, routing."""

from .base import (
    KIND_EXTERNAL_API,
    KIND_LOCAL_SERVER,
    KIND_MOCK,
    BackendEndpoint,
    BackendHub,
    ChatMessage,
    Completion,
    count_tokens,
)
from .mock import MockRule, load_script, render_request_text
from .routing import (
    HARD_TAG,
    ROUTE_DIRECT,
    ROUTE_EXISTING,
    ROUTE_EXTERNAL,
    ROUTE_HIRE,
    RoutingChoice,
    route_preferences,
    select_resource,
)

__all__ = [
    "BackendEndpoint",
    "BackendHub",
    "ChatMessage",
    "Completion",
    "MockRule",
    "RoutingChoice",
    "KIND_EXTERNAL_API",
    "KIND_LOCAL_SERVER",
    "KIND_MOCK",
    "HARD_TAG",
    "ROUTE_DIRECT",
    "ROUTE_EXISTING",
    "ROUTE_EXTERNAL",
    "ROUTE_HIRE",
    "count_tokens",
    "load_script",
    "render_request_text",
    "route_preferences",
    "select_resource",
]
