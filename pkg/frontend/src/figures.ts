import type { EChartsOption, SeriesOption } from "echarts";
import { Table, groupBy, requireColumns } from "./csv.js";

export interface FigureSpec {
  title?: string;
  width: number;
  height: number;
  logX?: boolean;
}

export const DEFAULT_SPEC: FigureSpec = { width: 800, height: 600 };

const PALETTE = [
  "#4878d0",
  "#ee854a",
  "#6acc64",
  "#d65f5f",
  "#956cb4",
  "#8c613c",
  "#dc7ec0",
  "#797979",
];

const bandSeries = (
  name: string,
  x: number[],
  lo: number[],
  hi: number[],
  color: string,
): SeriesOption[] => [
  {
    name: `${name} band lower`,
    type: "line",
    data: x.map((v, i) => [v, lo[i]]),
    lineStyle: { opacity: 0 },
    stack: `${name}-band`,
    symbol: "none",
    silent: true,
    tooltip: { show: false },
  },
  {
    name: `${name} band`,
    type: "line",
    data: x.map((v, i) => [v, hi[i] - lo[i]]),
    lineStyle: { opacity: 0 },
    stack: `${name}-band`,
    areaStyle: { color, opacity: 0.2 },
    symbol: "none",
    silent: true,
    tooltip: { show: false },
  },
];

/** ROC curves, one per K, with shaded confidence bands when the tpr_lo and
 *  tpr_hi columns are present. Requires columns K, fpr, tpr. */
export const rocOption = (table: Table, spec: FigureSpec): EChartsOption => {
  requireColumns(table, ["K", "fpr", "tpr"]);
  const hasBand =
    table.columns.includes("tpr_lo") && table.columns.includes("tpr_hi");
  const series: SeriesOption[] = [];
  let idx = 0;
  for (const [k, rows] of groupBy(table, "K")) {
    const sorted = [...rows].sort((a, b) => a.fpr - b.fpr);
    const color = PALETTE[idx % PALETTE.length];
    if (hasBand) {
      series.push(
        ...bandSeries(
          `K=${k}`,
          sorted.map((r) => r.fpr),
          sorted.map((r) => r.tpr_lo),
          sorted.map((r) => r.tpr_hi),
          color,
        ),
      );
    }
    series.push({
      name: `K=${k}`,
      type: "line",
      data: sorted.map((r) => [r.fpr, r.tpr]),
      lineStyle: { color, width: 2 },
      itemStyle: { color },
      symbol: "none",
    });
    idx += 1;
  }
  return {
    animation: false,
    title: { text: spec.title ?? "Support recovery ROC" },
    legend: { top: 28, data: series.filter((s) => s.type === "line" && !String(s.name).includes("band")).map((s) => String(s.name)) },
    xAxis: { name: "false positive rate", min: 0, max: 1, type: "value" },
    yAxis: { name: "true positive rate", min: 0, max: 1, type: "value" },
    series,
  };
};

/** MSE versus block count K, optionally on a log x axis, with a shaded band
 *  when mse_lo and mse_hi are present. Requires columns K, mse. */
export const mseKOption = (table: Table, spec: FigureSpec): EChartsOption => {
  requireColumns(table, ["K", "mse"]);
  const hasBand =
    table.columns.includes("mse_lo") && table.columns.includes("mse_hi");
  const sorted = [...table.rows].sort((a, b) => a.K - b.K);
  const ks = sorted.map((r) => r.K);
  const color = PALETTE[0];
  const series: SeriesOption[] = [];
  if (hasBand) {
    series.push(
      ...bandSeries(
        "mse",
        ks,
        sorted.map((r) => r.mse_lo),
        sorted.map((r) => r.mse_hi),
        color,
      ),
    );
  }
  series.push({
    name: "mse",
    type: "line",
    data: sorted.map((r) => [r.K, r.mse]),
    lineStyle: { color, width: 2 },
    itemStyle: { color },
    symbol: "circle",
  });
  return {
    animation: false,
    title: { text: spec.title ?? "Estimation error versus block count" },
    xAxis: {
      name: "K",
      type: spec.logX ? "log" : "value",
      min: spec.logX ? undefined : 0,
    },
    yAxis: { name: "mean squared error", type: "value" },
    series,
  };
};
