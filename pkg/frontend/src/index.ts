export { ApiClient, ApiError, caretFromMessage } from "./api.js";
export {
    backTrackQuery,
    forwardTrackQuery,
    inspectDetail,
    nodeContextAction,
} from "./actions.js";
export type { ContextAction, InspectDetail } from "./actions.js";
export { QueryConsole } from "./console.js";
export type { InlineError } from "./console.js";
export { forceLayout } from "./layout.js";
export { LiveMonitorPanel, eventSourceConnector } from "./monitor.js";
export { STEP_PALETTE, STORE_COLOR, stepColor } from "./palette.js";
export {
    GraphViewModel,
    edgeKey,
    graphEdgeSet,
    graphNodeSet,
    relLabel,
} from "./viewmodel.js";
export type { ApplyDelta, ViewEdge, ViewNode } from "./viewmodel.js";
export type {
    EdgeJson,
    GraphJson,
    MonitorInfo,
    NodeJson,
    NotificationEvent,
    QueryResponse,
    ServerEvent,
    StatsEvent,
} from "./types.js";
