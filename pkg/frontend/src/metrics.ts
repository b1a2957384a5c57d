/**
 * Session export: the metrics panel shown when a task completes.
 *
 * The server is the oracle: the displayed numbers come verbatim from
 * GET /session/<id>/metrics, and the export references the server-side log
 * for replay.  Exporting twice yields the identical document.
 */

export interface ServerMetrics {
  task: string;
  config: string;
  time_s: number | null;
  dist_left_m: number | null;
  dist_right_m: number | null;
}

export interface SessionExport {
  sessionId: string;
  serverLogRef: string;
  rows: ServerMetrics[];
}

export function buildExport(
  sessionId: string,
  metrics: ServerMetrics,
  logRef: string,
): SessionExport {
  return { sessionId, serverLogRef: logRef, rows: [metrics] };
}

export function renderExport(doc: SessionExport): string {
  const lines = [
    `session ${doc.sessionId}`,
    `server log: ${doc.serverLogRef} (replayable)`,
    "task,config,time_s,dist_left_m,dist_right_m",
  ];
  for (const m of doc.rows) {
    const t = m.time_s === null ? "incomplete" : String(m.time_s);
    const dl = m.dist_left_m === null ? "" : String(m.dist_left_m);
    const dr = m.dist_right_m === null ? "" : String(m.dist_right_m);
    lines.push(`${m.task},${m.config},${t},${dl},${dr}`);
  }
  return lines.join("\n") + "\n";
}

export function formatTimer(elapsedMs: number): string {
  const totalSeconds = Math.floor(elapsedMs / 1000);
  const minutes = Math.floor(totalSeconds / 60);
  const seconds = totalSeconds % 60;
  return `${minutes}:${String(seconds).padStart(2, "0")}`;
}
