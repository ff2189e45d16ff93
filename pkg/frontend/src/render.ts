import * as echarts from "echarts";
import type { EChartsOption } from "echarts";

/** Render an option to an SVG string with fixed dimensions (server side,
 *  no DOM). Output is a pure function of the option and dimensions. */
export const renderSvg = (
  option: EChartsOption,
  width: number,
  height: number,
): string => {
  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width,
    height,
  });
  chart.setOption(option);
  const svg = chart.renderToSVGString();
  chart.dispose();
  return svg;
};
