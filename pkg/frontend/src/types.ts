// Payload shapes as delivered by the coordinator API. Mirrors only; no
// client-side business logic lives in these.

export interface NodeInfo {
  node_id: string;
  agent_name: string;
  os: string;
  arch: string;
  engine: string;
  connected: boolean;
  power: Record<string, number>;
  suspect_count: number;
}

export interface WordlistInfo {
  id: string;
  line_count: number;
  byte_size: number;
}

export interface NodeTaskStats {
  tried: number;
  speed_hps: number;
  tasks: number;
}

export interface JobStats {
  job_id: string;
  status: string;
  algorithm: string;
  mode: string;
  owner: string;
  total_hashes: number;
  cracked_count: number;
  recovery_percent: number;
  per_node: Record<string, NodeTaskStats>;
  elapsed_seconds: number;
  created_at: number;
  finished_at: number | null;
  partial_results: boolean;
}

export interface CrackedRow {
  hash: string;
  plaintext_hex: string;
  node_id: string;
  at: number;
}

export interface UserStats {
  total_jobs: number;
  active: number;
  completed: number;
  failed: number;
  by_mode: Record<string, number>;
  by_algorithm: Record<string, number>;
  mode_percent: Record<string, number>;
  algorithm_percent: Record<string, number>;
  activity_by_day: Record<string, number>;
}

export interface AdminStats {
  totals: UserStats;
  users: number;
  nodes: NodeInfo[];
}

export interface UserInfo {
  user_id: string;
  username: string;
  role: string;
}

export type UiEvent =
  | { type: "status"; job_id: string; status: string; cracked_count: number;
      total_hashes: number; partial_results: boolean }
  | { type: "cracked"; job_id: string; hash: string; plaintext_hex: string;
      node_id: string; at: number }
  | { type: "progress"; job_id: string; task_id: string; node_id: string;
      tried: number; speed_hps: number };

export interface ModeSpec {
  mode: "brute" | "dictionary" | "rules" | "combinator";
  min_length?: number;
  max_length?: number;
  wordlists?: string[];
  rules?: string[];
  left?: string;
  right?: string;
}

export interface JobSubmission {
  algorithm: string;
  mode: ModeSpec;
  node_ids: string[];
  hashes?: string[];
  hashes_text?: string;
}
