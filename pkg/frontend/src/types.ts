// Shapes mirror docs/api.md; the console holds no state of its own.

export type FlagValue =
  | "repeat_defacement"
  | "fixed"
  | "defaced_fluctuating"
  | "defaced_constant"
  | "not_found";

export type StatusValue =
  | "defaced"
  | "suspected_false_positive"
  | "clean"
  | "unreachable";

export type VerdictValue = "confirmed_defaced" | "false_positive" | "remediated";

export interface ProfileSummary {
  total: number;
  distinct: number;
  title_hits: string[];
  url_hits: string[];
  by_class: Record<string, number>;
}

export interface VerdictRecord {
  page_id: string;
  verdict: VerdictValue;
  analyst: string;
  at: string;
  note: string | null;
}

export interface TriageItem {
  page_id: string;
  url: string;
  origin: string;
  tld_group: string;
  monitoring: string;
  current_flag: FlagValue | null;
  status: StatusValue | null;
  confidence: string | null;
  latest_profile: ProfileSummary | null;
  last_observed_at: string | null;
  observation_count: number;
  verdict: VerdictRecord | null;
}

export interface PageList {
  items: TriageItem[];
  total: number;
  page: number;
  per_page: number;
  pages: number;
}

export interface TimelinePoint {
  at: string;
  reachable: boolean;
  redirect_cross_site: boolean;
  total: number;
  distinct: number;
  profile: ProfileSummary;
  per_keyword: Record<string, Record<string, number>>;
}

export interface Cycle {
  start_at: string;
  fixed_at: string;
  delta_hours: number;
}

export interface SnapshotRef {
  fetched_at: string;
  content_digest: string;
}

export interface Timeline {
  page: TriageItem;
  series: TimelinePoint[];
  cycles: Cycle[];
  delta_first_hours: number | null;
  delta_avg_hours: number | null;
  flag: FlagValue | null;
  snapshots: SnapshotRef[];
}
