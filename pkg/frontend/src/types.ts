// Wire shapes of the control service. Field names are the protocol's
// lower_snake_case; do not rename.

export interface ScoresDoc {
  utilization: number;
  cost: number;
  reliability: number;
  fitness: number;
  redundancy: number;
  pleiotropy: number;
}

export interface GenerationRecord {
  generation: number;
  best_scores: ScoresDoc;
  best_network_digest: string;
  population_fitness: number[];
  converged: boolean;
}

export interface NodeDoc {
  id: number;
  kind: "client" | "server";
  x: number;
  y: number;
  traffic: number;
  failure_rate: number;
  state: string;
  steps_since_failure: number;
}

export interface EdgeDoc {
  endpoints: [number, number];
  kind: string;
  weight: number;
  failure_rate: number;
  state: "working" | "failed";
  steps_since_failure: number;
}

export interface NetworkDoc {
  format: string;
  version: number;
  generation_born: number;
  nodes: NodeDoc[];
  edges: EdgeDoc[];
  [extra: string]: unknown;
}

export interface GaConfigDoc {
  seed: number;
  generations: number;
  q: number;
  n_clients: number;
  n_servers: number;
  grid_width: number;
  grid_height: number;
  min_spacing: number;
  t_max: number;
  t_s: number;
  link_failure_prob: number;
  link_repair_prob: number;
  u_low: number;
  u_high: number;
  crossover_keep_prob: number;
  server_link_bias: number;
  links_per_low_mutation: number;
}

export type SessionMode = "running" | "paused" | "finished";

export interface SessionState {
  run_id: string;
  mode: SessionMode;
  current_generation: number;
  live_config: GaConfigDoc;
  latest_record: GenerationRecord | null;
  elite_network: NetworkDoc;
}
