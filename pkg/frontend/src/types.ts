// Wire contract of the console API: GET /status, POST /override, WS /stream.

export interface OwnShip {
  x: number;
  y: number;
  speed: number;
  heading: number;
  thrust: number;
  rudder: number;
}

export interface ObstacleState {
  id: string;
  x: number;
  y: number;
  speed: number;
  heading: number;
}

export interface DetectionState {
  id: string;
  x: number;
  y: number;
  range: number;
  velocity: [number, number] | null;
  identified: boolean;
}

export interface SensorFix {
  source: string;
  available: boolean;
  x: number | null;
  y: number | null;
  quality: string;
}

export interface NavSolution {
  x: number;
  y: number;
  source: string;
  discrepancy: number;
  flags: string[];
}

export interface Equipment {
  state: string;
  primary_power: boolean;
  active_controller: string;
  heartbeat_age: number;
  degraded: string[];
}

export interface PathWaypoint {
  t: number;
  x: number;
  y: number;
  speed: number;
}

export interface Snapshot {
  time: number;
  environment: {
    own: OwnShip;
    obstacles: ObstacleState[];
    detections: DetectionState[];
  };
  sensors: {
    gps: SensorFix | null;
    ins: SensorFix | null;
    solution: NavSolution | null;
  };
  equipment: Equipment;
  path: { waypoints: PathWaypoint[]; total_length_nmi: number } | null;
  metrics: { miles: number; nav_error_rate: number; loop_ms: number };
  safe_distance: number;
  pickup_points: [number, number][];
}

export type StreamMessage =
  | { type: "snapshot"; seq: number; payload: Snapshot }
  | { type: "failover"; seq: number; payload: FailoverEventPayload }
  | { type: "alert"; seq: number; payload: AlertPayload };

export interface FailoverEventPayload {
  time: number;
  kind: string;
  old_state: string;
  new_state: string;
  cause: string;
}

export interface AlertPayload {
  time: number;
  kind: string;
  discrepancy?: number;
  chosen_source?: string;
  flags?: string[];
}

export type OverrideKind = "engage" | "release" | "helm";

export interface OverrideRequest {
  kind: OverrideKind;
  operator_id?: string;
  thrust?: number;
  rudder?: number;
  emergency_stop?: boolean;
}

export interface OverrideAck {
  accepted: boolean;
  kind: string;
  operator_id: string;
  sim_time: number;
  effect_time: number;
}
