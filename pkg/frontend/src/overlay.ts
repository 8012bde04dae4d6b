/** Document overlay view: renders the design from its neutral JSON (boxes,
 * colors, text) as SVG and draws highlight/redline layers over it. All
 * highlight geometry comes from the explanation endpoint; the overlay never
 * derives analytic geometry itself. */

import type { Annotation, BBox, Color, DesignDocument, Explanation } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function cssColor(color: Color | undefined, fallback: string): string {
  if (!color) return fallback;
  const [r, g, b, a] = color;
  return a === undefined ? `rgb(${r},${g},${b})` : `rgba(${r},${g},${b},${a})`;
}

export class DocumentOverlay {
  private svg: SVGSVGElement;
  private elementLayer: SVGGElement;
  private highlightLayer: SVGGElement;
  private annotationLayer: SVGGElement;
  private redlineLayer: SVGGElement;
  private doc: DesignDocument | null = null;
  private elementRects = new Map<string, SVGRectElement>();

  onRedline: ((region: BBox) => void) | null = null;
  private drawing: { startX: number; startY: number; rect: SVGRectElement } | null = null;
  private redlineArmed = false;

  constructor(container: HTMLElement) {
    this.svg = document.createElementNS(SVG_NS, "svg");
    this.svg.classList.add("document-overlay");
    this.elementLayer = document.createElementNS(SVG_NS, "g");
    this.highlightLayer = document.createElementNS(SVG_NS, "g");
    this.annotationLayer = document.createElementNS(SVG_NS, "g");
    this.redlineLayer = document.createElementNS(SVG_NS, "g");
    this.svg.append(this.elementLayer, this.highlightLayer, this.annotationLayer, this.redlineLayer);
    container.appendChild(this.svg);
    this.svg.addEventListener("pointerdown", (e) => this.beginRedline(e));
    this.svg.addEventListener("pointermove", (e) => this.dragRedline(e));
    this.svg.addEventListener("pointerup", (e) => this.finishRedline(e));
  }

  render(doc: DesignDocument): void {
    this.doc = doc;
    this.elementRects.clear();
    this.elementLayer.textContent = "";
    this.highlightLayer.textContent = "";
    this.annotationLayer.textContent = "";
    this.redlineLayer.textContent = "";
    this.svg.setAttribute("viewBox", `0 0 ${doc.canvas.width} ${doc.canvas.height}`);

    const backdrop = document.createElementNS(SVG_NS, "rect");
    backdrop.setAttribute("width", String(doc.canvas.width));
    backdrop.setAttribute("height", String(doc.canvas.height));
    backdrop.setAttribute("fill", cssColor(doc.background, "#ffffff"));
    this.elementLayer.appendChild(backdrop);

    for (const element of doc.elements) {
      const rect = document.createElementNS(SVG_NS, "rect");
      rect.setAttribute("x", String(element.bbox.x));
      rect.setAttribute("y", String(element.bbox.y));
      rect.setAttribute("width", String(element.bbox.w));
      rect.setAttribute("height", String(element.bbox.h));
      const style = element.style ?? {};
      const paint = style.fill ?? style.background ?? undefined;
      rect.setAttribute(
        "fill",
        element.kind === "text" ? "transparent" : cssColor(paint, "#e8e8e8"),
      );
      rect.setAttribute("stroke", cssColor(style.stroke, "#c0c0c0"));
      rect.dataset.elementId = element.id;
      rect.classList.add("design-element", `kind-${element.kind}`);
      this.elementLayer.appendChild(rect);
      this.elementRects.set(element.id, rect);

      if (element.kind === "text" && element.content?.text) {
        const text = document.createElementNS(SVG_NS, "text");
        text.setAttribute("x", String(element.bbox.x + 4));
        text.setAttribute("y", String(element.bbox.y + (style.font_size ?? 12) + 2));
        text.setAttribute("font-size", String(style.font_size ?? 12));
        if (style.font_family) text.setAttribute("font-family", style.font_family);
        if (style.font_weight) text.setAttribute("font-weight", style.font_weight);
        if (style.font_style) text.setAttribute("font-style", style.font_style);
        text.setAttribute("fill", cssColor(style.fill, "#222222"));
        text.textContent = element.content.text;
        this.elementLayer.appendChild(text);
      }
    }
  }

  /** Highlight exactly the geometry of one explanation payload. */
  showExplanation(explanation: Explanation): void {
    this.clearHighlights();
    for (const rect of this.elementRects.values()) rect.classList.remove("highlight-deviant");
    for (const id of explanation.element_ids) {
      this.elementRects.get(id)?.classList.add("highlight-deviant");
    }
    for (const { bbox } of explanation.geometry) {
      this.addHighlightRect(bbox, "highlight-box");
    }
    if (explanation.cluster_box) {
      this.addHighlightRect(explanation.cluster_box, "highlight-cluster");
    }
    for (const cell of explanation.cell_rects ?? []) {
      this.addHighlightRect(cell, "highlight-cell");
    }
  }

  clearHighlights(): void {
    this.highlightLayer.textContent = "";
    for (const rect of this.elementRects.values()) rect.classList.remove("highlight-deviant");
  }

  highlightedElementIds(): string[] {
    const out: string[] = [];
    for (const [id, rect] of this.elementRects) {
      if (rect.classList.contains("highlight-deviant")) out.push(id);
    }
    return out.sort();
  }

  private addHighlightRect(bbox: BBox, cls: string): void {
    const rect = document.createElementNS(SVG_NS, "rect");
    rect.setAttribute("x", String(bbox.x));
    rect.setAttribute("y", String(bbox.y));
    rect.setAttribute("width", String(bbox.w));
    rect.setAttribute("height", String(bbox.h));
    rect.classList.add(cls);
    this.highlightLayer.appendChild(rect);
  }

  showAnnotations(annotations: Annotation[]): void {
    this.annotationLayer.textContent = "";
    if (!this.doc) return;
    for (const annotation of annotations) {
      const boxes: BBox[] = [];
      if (annotation.target_region) boxes.push(annotation.target_region);
      for (const id of annotation.target_element_ids) {
        const el = this.doc.elements.find((e) => e.id === id);
        if (el) boxes.push(el.bbox);
      }
      for (const bbox of boxes) {
        const rect = document.createElementNS(SVG_NS, "rect");
        rect.setAttribute("x", String(bbox.x));
        rect.setAttribute("y", String(bbox.y));
        rect.setAttribute("width", String(bbox.w));
        rect.setAttribute("height", String(bbox.h));
        rect.classList.add("annotation-box", `status-${annotation.status}`);
        rect.dataset.annotationId = annotation.id;
        this.annotationLayer.appendChild(rect);
      }
    }
  }

  /** Arm the redline tool: the next drag creates a region annotation. */
  armRedline(armed = true): void {
    this.redlineArmed = armed;
    this.svg.classList.toggle("redline-armed", armed);
  }

  private canvasPoint(event: PointerEvent): { x: number; y: number } {
    if (!this.doc) return { x: 0, y: 0 };
    const bounds = this.svg.getBoundingClientRect();
    const sx = bounds.width > 0 ? this.doc.canvas.width / bounds.width : 1;
    const sy = bounds.height > 0 ? this.doc.canvas.height / bounds.height : 1;
    return { x: (event.clientX - bounds.left) * sx, y: (event.clientY - bounds.top) * sy };
  }

  private beginRedline(event: PointerEvent): void {
    if (!this.redlineArmed || !this.doc) return;
    const { x, y } = this.canvasPoint(event);
    const rect = document.createElementNS(SVG_NS, "rect");
    rect.classList.add("redline-draft");
    rect.setAttribute("x", String(x));
    rect.setAttribute("y", String(y));
    this.redlineLayer.appendChild(rect);
    this.drawing = { startX: x, startY: y, rect };
  }

  private dragRedline(event: PointerEvent): void {
    if (!this.drawing) return;
    const { x, y } = this.canvasPoint(event);
    const region = this.dragRegion(x, y);
    this.drawing.rect.setAttribute("x", String(region.x));
    this.drawing.rect.setAttribute("y", String(region.y));
    this.drawing.rect.setAttribute("width", String(region.w));
    this.drawing.rect.setAttribute("height", String(region.h));
  }

  private dragRegion(x: number, y: number): BBox {
    const d = this.drawing!;
    return {
      x: Math.min(d.startX, x),
      y: Math.min(d.startY, y),
      w: Math.abs(x - d.startX),
      h: Math.abs(y - d.startY),
    };
  }

  private finishRedline(event: PointerEvent): void {
    if (!this.drawing) return;
    const { x, y } = this.canvasPoint(event);
    const region = this.dragRegion(x, y);
    this.drawing.rect.remove();
    this.drawing = null;
    this.armRedline(false);
    if (region.w > 1 && region.h > 1) {
      this.onRedline?.(region);
    }
  }
}
