#!/usr/bin/env python3
"""Generates the offline page fixtures (deterministic).

Pages are stored as <pages_dir>/<sha256(url)>.html, the layout FixturePageSource reads.
The product page is padded until its markup without script and style elements reaches
PRODUCT_MARKUP_TARGET bytes.
"""
import hashlib
import os
import random
import re
import sys

PRODUCT_URL = "https://shop.example.com/de-DE/shop/ls/dp/physical-goods/900653"
CART_URL = "https://shop.example.com/de-DE/shop/cart"
PRODUCT_MARKUP_TARGET = 35_200
PRODUCT_TOTAL_TARGET = 100_000

WORDS = ("leder schwarz edelstahl premium zubehör original qualität fahrzeug design sport komfort "
         "robust wetterfest pflege garantie lieferung versand modell serie innenraum außen").split()


def strip_raw_text(html):
    return re.sub(r"<(script|style)\b[^>]*>.*?</\1\s*>", "", html, flags=re.S | re.I)


def sentence(rng, n):
    return " ".join(rng.choice(WORDS) for _ in range(n)).capitalize() + "."


def style_block(rng, rules):
    out = []
    for i in range(rules):
        cls = f".c-{rng.randrange(16**6):06x}"
        props = ";".join(
            f"{p}:{v}" for p, v in rng.sample(
                [("margin", "0 auto"), ("padding", "12px 16px"), ("color", "#262626"), ("display", "flex"),
                 ("font-size", "14px"), ("line-height", "1.5"), ("border", "1px solid #e6e6e6"),
                 ("background", "#fff"), ("transition", "opacity .2s ease-in-out"), ("gap", "8px")], 4))
        out.append(f"{cls}{{{props}}}")
        if i % 7 == 0:
            out.append(f"@media (min-width:{rng.choice([600, 960, 1280])}px){{{cls}{{width:{rng.randrange(20, 100)}%}}}}")
    return "<style data-emotion=\"css\">" + "".join(out) + "</style>\n"


def script_block(rng, entries):
    items = ",".join(
        f'{{"sku":"{rng.randrange(10**6, 10**7)}","name":"{sentence(rng, 3)}","price":{rng.randrange(900, 99000) / 100},'
        f'"tags":["{rng.choice(WORDS)}","{rng.choice(WORDS)}"]}}' for _ in range(entries))
    return ("<script>window.__PRELOADED_STATE__={\"catalog\":{\"items\":[" + items + "]},"
            "\"session\":{\"locale\":\"de-DE\",\"market\":\"DE\"}};</script>\n")


def analytics_script(rng):
    body = ";".join(f"dl.push({{event:'view_{i}',ts:{rng.randrange(10**9)}}})" for i in range(40))
    return f"<script type=\"text/javascript\">(function(){{var dl=window.dataLayer=window.dataLayer||[];{body}}})();</script>\n"


def tile(rng, i):
    price = f"{rng.randrange(19, 499)},{rng.randrange(0, 99):02d}"
    return (f'<li class="product-tile" data-testid="recommendation-tile-{i}">'
            f'<a href="/de-DE/shop/ls/dp/physical-goods/{rng.randrange(10**5, 10**6)}" data-testid="recommendation-link-{i}">'
            f'<img src="/media/{rng.randrange(10**8):08x}.jpg" alt="{sentence(rng, 2)}" loading="lazy">'
            f'<span class="product-tile-name">{sentence(rng, 4)}</span>'
            f'<span class="product-tile-price" data-testid="recommendation-price-{i}">{price} €</span></a></li>\n')


def accordion(rng):
    sections = [("Produktdetails", 6), ("Material und Pflege", 5), ("Lieferumfang", 4), ("Versand und Rückgabe", 5)]
    out = ['<section class="accordion" data-testid="product-accordion">\n']
    for i, (title, n) in enumerate(sections):
        expanded = "true" if i == 0 else "false"
        hidden = "" if i == 0 else " hidden"
        items = "".join(f"<li>{sentence(rng, 8)}</li>" for _ in range(n))
        out.append(
            f'<div class="accordion-item" data-testid="accordion-item-{i}" aria-expanded="{expanded}">'
            f'<button class="accordion-item-header" aria-controls="accordion-panel-{i}" data-testid="accordion-toggle-{i}">'
            f'<h2>{title}</h2><span class="accordion-arrow" aria-hidden="true"></span></button>'
            f'<div class="accordion-item-children" id="accordion-panel-{i}"{hidden}><ul>{items}</ul></div></div>\n')
    out.append("</section>\n")
    return "".join(out)


def product_page(rng):
    head = ('<!DOCTYPE html>\n<html lang="de">\n<head>\n<meta charset="utf-8">\n'
            '<title>Lederschlüsselanhänger | Shop</title>\n'
            '<meta name="viewport" content="width=device-width, initial-scale=1">\n'
            '<link rel="stylesheet" href="/static/css/main.3f9c2a.css">\n')
    header = ('<header class="site-header" data-testid="site-header">\n'
              '<a href="/de-DE/shop" data-testid="logo-link">Shop</a>\n'
              '<nav data-testid="main-navigation"><ul>'
              + "".join(f'<li><a href="/de-DE/shop/{w}" data-testid="nav-link-{w}">{w.capitalize()}</a></li>'
                        for w in ("fahrzeuge", "zubehör", "lifestyle", "service", "angebote"))
              + '</ul></nav>\n<button data-testid="cart-button" aria-label="Warenkorb">0</button>\n</header>\n')
    main = ('<main id="content">\n<nav class="breadcrumb" data-testid="breadcrumb">'
            '<a href="/de-DE/shop">Shop</a> / <a href="/de-DE/shop/lifestyle">Lifestyle</a> / '
            '<span>Schlüsselanhänger</span></nav>\n'
            '<div class="product-stage" data-testid="product-stage">\n'
            '<div class="gallery" data-testid="product-gallery">'
            + "".join(f'<img src="/media/900653-{i}.jpg" alt="Schlüsselanhänger Ansicht {i + 1}" data-testid="gallery-image-{i}">'
                      for i in range(5))
            + '</div>\n<div class="buy-box" data-testid="buy-box">\n'
            '<h1 data-testid="product-title">Schlüsselanhänger Leder</h1>\n'
            '<p class="price" data-testid="product-price">39,00 €</p>\n'
            '<p class="vat-note">inkl. MwSt., zzgl. Versandkosten</p>\n'
            '<label for="qty">Menge</label><select id="qty" data-testid="quantity-select">'
            + "".join(f'<option value="{q}">{q}</option>' for q in range(1, 6))
            + '</select>\n<button class="btn-primary" data-testid="add-to-cart-button">In den Warenkorb</button>\n'
            '</div>\n</div>\n')
    main += accordion(rng)
    footer = ('<footer class="site-footer" data-testid="site-footer"><ul>'
              + "".join(f'<li><a href="/de-DE/{w}" data-testid="footer-link-{w}">{w.capitalize()}</a></li>'
                        for w in ("impressum", "datenschutz", "agb", "kontakt", "cookies"))
              + '</ul></footer>\n')

    tiles = []
    def assemble(raw_blocks):
        recs = ('<section class="recommendations" data-testid="recommendations"><h2>Das könnte Ihnen auch gefallen</h2>'
                '<ul>\n' + "".join(tiles) + '</ul></section>\n')
        return (head + raw_blocks[0] + "</head>\n<body>\n" + header + main + raw_blocks[1] + recs + "</main>\n"
                + footer + raw_blocks[2] + "</body>\n</html>\n")

    raw = ["", "", ""]
    while len(strip_raw_text(assemble(raw))) < PRODUCT_MARKUP_TARGET:
        tiles.append(tile(rng, len(tiles)))
    raw = [style_block(rng, 40), "", ""]
    k = 0
    while len(assemble(raw)) < PRODUCT_TOTAL_TARGET:
        slot = 1 + k % 2
        raw[slot] += script_block(rng, 12) if k % 3 else analytics_script(rng)
        raw[0] += style_block(rng, 20) if k % 4 == 0 else ""
        k += 1
    return assemble(raw)


def cart_page(rng):
    return ('<!DOCTYPE html>\n<html lang="de">\n<head>\n<meta charset="utf-8">\n<title>Warenkorb | Shop</title>\n'
            + style_block(rng, 30) + '</head>\n<body>\n'
            '<header class="site-header" data-testid="site-header"><a href="/de-DE/shop" data-testid="logo-link">Shop</a>'
            '<button data-testid="cart-button" aria-label="Warenkorb">0</button></header>\n'
            '<main id="content">\n<h1 data-testid="cart-title">Warenkorb</h1>\n'
            '<div class="cart-empty" data-testid="cart-empty-message"><p>Ihr Warenkorb ist leer.</p>'
            '<a href="/de-DE/shop" data-testid="continue-shopping-link">Weiter einkaufen</a></div>\n'
            '<ul class="cart-items" data-testid="cart-items"></ul>\n'
            '<div class="cart-summary" data-testid="cart-summary">'
            '<p data-testid="cart-total">Gesamtsumme: 0,00 €</p>\n'
            '<!-- The checkout button is only rendered once the cart holds at least one item. -->\n'
            '<template data-testid="checkout-button-template">'
            '<button class="btn-primary" data-testid="checkout-button">Zur Kasse</button></template>\n'
            '</div>\n</main>\n' + script_block(rng, 6) + '</body>\n</html>\n')


def write(pages_dir, url, html):
    name = hashlib.sha256(url.encode()).hexdigest() + ".html"
    with open(os.path.join(pages_dir, name), "w", encoding="utf-8", newline="\n") as f:
        f.write(html)
    print(f"{url} -> {name}: {len(html.encode())} bytes, {len(strip_raw_text(html).encode())} without script/style")


def main():
    pages_dir = sys.argv[1] if len(sys.argv) > 1 else "fixtures/pages"
    os.makedirs(pages_dir, exist_ok=True)
    write(pages_dir, PRODUCT_URL, product_page(random.Random(900653)))
    write(pages_dir, CART_URL, cart_page(random.Random(102)))


if __name__ == "__main__":
    main()
